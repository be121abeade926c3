#pragma once

#include "covfield/manifold.hpp"

namespace covfield {

/// Non-singular Jacobian A of a change of tangent-space coordinates x -> y,
/// so that v_y = A v_x. Construction rejects matrices with condition
/// estimate above 1e12 (SingularJacobian).
class ChartJacobian {
 public:
  explicit ChartJacobian(Mat a, double max_condition = 1e12);

  static ChartJacobian identity(int n) { return ChartJacobian(Mat::Identity(n, n)); }

  const Mat& matrix() const { return a_; }
  const Mat& inverse() const { return inv_; }
  int dim() const { return static_cast<int>(a_.rows()); }

 private:
  Mat a_;
  Mat inv_;
};

/// Coordinates on the tangent space at `base`: the columns of `frame` are
/// ambient vectors spanning it. Orthonormal frames give G_x = I; reframed
/// charts carry a general metric representation.
class Chart {
 public:
  /// Deterministic orthonormal frame at q.
  static Chart orthonormal(const Point& q);
  /// Orthonormal frame at q obtained by projecting `reference`'s frame onto
  /// T_q M and re-orthonormalizing; continuous in q near reference.base().
  static Chart transported(const Chart& reference, const Point& q);
  /// Arbitrary basis; each column must be tangent at q and the set
  /// independent. Orthonormality is not required.
  static Chart from_frame(const Point& q, Mat frame);

  const Point& base() const { return base_; }
  const Mat& frame() const { return frame_; }
  int dim() const { return static_cast<int>(frame_.cols()); }
  /// Gram matrix of the frame under the metric.
  const Mat& gram() const { return gram_; }
  bool is_orthonormal(double tol = 1e-10) const;
  /// Cached is_orthonormal(1e-13).
  bool orthonormal() const { return orthonormal_; }

 private:
  Chart(Point base, Mat frame);

  Point base_;
  Mat frame_;
  Mat gram_;
  bool orthonormal_ = false;
};

/// Chart y with v_y = A v_x, i.e. frame_y = frame_x A^{-1}.
Chart reframe(const Chart& x, const ChartJacobian& a);

/// G_x: Gram matrix of the frame under the Riemannian metric.
SpdMatrix metric_at(const Chart& chart);

/// Components of v in the chart's frame (solves G c = <e_i, v>).
Vec components(const Chart& chart, const TangentVector& v);
/// Ambient tangent vector with the given chart components.
TangentVector from_components(const Chart& chart, const Vec& c);

/// v_y = A v_x.
Vec transform_vector(const Vec& v_x, const ChartJacobian& a);
/// Covariant 2-tensor (metric): G_y = (A^{-1})' G_x A^{-1}.
SpdMatrix transform_metric(const SpdMatrix& g_x, const ChartJacobian& a);
/// Contravariant 2-tensor (covariance, Z): W_y = A W_x A'.
SpdMatrix transform_contravariant(const SpdMatrix& w_x, const ChartJacobian& a);
/// Linear operator on the tangent space: L_y = A L_x A^{-1}.
Mat transform_operator(const Mat& l_x, const ChartJacobian& a);
/// Contraction TW of a covariant and a contravariant tensor (e.g. G Sigma):
/// (TW)_y = (A^{-1})' (TW)_x A'.
Mat transform_mixed(const Mat& tw_x, const ChartJacobian& a);

}  // namespace covfield
