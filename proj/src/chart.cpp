#include "covfield/chart.hpp"

#include "covfield/error.hpp"

#include <cmath>

namespace covfield {

namespace {

double condition_number(const Mat& a) {
  const Vec s = singular_values(a);
  if (s.size() == 0 || s(s.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / s(s.size() - 1);
}

// Gram-Schmidt under the metric at `at`.
Mat orthonormalize(const Point& at, Mat frame) {
  for (int i = 0; i < frame.cols(); ++i) {
    Vec col = frame.col(i);
    for (int j = 0; j < i; ++j) {
      col -= inner(at, frame.col(j), col) * frame.col(j);
    }
    const double len = std::sqrt(std::max(0.0, inner(at, col, col)));
    if (len < 1e-12) throw Error(ErrorKind::Validation, "frame vectors are dependent");
    frame.col(i) = col / len;
  }
  return frame;
}

}  // namespace

ChartJacobian::ChartJacobian(Mat a, double max_condition) : a_(std::move(a)) {
  if (a_.rows() != a_.cols() || a_.rows() == 0) {
    throw Error(ErrorKind::Validation, "Jacobian must be square");
  }
  if (!a_.allFinite() || !(condition_number(a_) <= max_condition)) {
    throw Error(ErrorKind::SingularJacobian, "Jacobian is numerically singular");
  }
  inv_ = a_.fullPivLu().inverse();
}

Chart::Chart(Point base, Mat frame) : base_(std::move(base)), frame_(std::move(frame)) {
  const int n = static_cast<int>(frame_.cols());
  gram_.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) gram_(i, j) = inner(base_, frame_.col(i), frame_.col(j));
  }
  orthonormal_ = (gram_ - Mat::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-13;
}

Chart Chart::orthonormal(const Point& q) {
  const Manifold& m = q.manifold();
  const Vec& x = q.coords();
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      return Chart(q, Mat::Identity(m.dimension(), m.dimension()));
    case ManifoldKind::Sphere2: {
      Eigen::Index axis = 0;
      x.cwiseAbs().minCoeff(&axis);
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e(axis) = 1.0;
      const Eigen::Vector3d q3(x(0), x(1), x(2));
      const Eigen::Vector3d e1 = (e - e.dot(q3) * q3).normalized();
      const Eigen::Vector3d e2 = q3.cross(e1);
      Mat frame(3, 2);
      frame.col(0) = e1;
      frame.col(1) = e2;
      return Chart(q, frame);
    }
    case ManifoldKind::Hyperbolic2: {
      Mat frame(3, 2);
      frame.col(0) = TangentVector::project(q, Eigen::Vector3d::UnitX()).components();
      frame.col(1) = TangentVector::project(q, Eigen::Vector3d::UnitY()).components();
      return Chart(q, orthonormalize(q, frame));
    }
  }
  return Chart(q, Mat());
}

Chart Chart::transported(const Chart& reference, const Point& q) {
  if (!(reference.base().manifold() == q.manifold())) {
    throw Error(ErrorKind::Validation, "cannot transport a frame across manifolds");
  }
  Mat frame(reference.frame().rows(), reference.frame().cols());
  for (int i = 0; i < frame.cols(); ++i) {
    frame.col(i) = TangentVector::project(q, reference.frame().col(i)).components();
  }
  return Chart(q, orthonormalize(q, frame));
}

Chart Chart::from_frame(const Point& q, Mat frame) {
  const Manifold& m = q.manifold();
  if (frame.rows() != m.ambient_dimension() || frame.cols() != m.dimension()) {
    throw Error(ErrorKind::Validation, "frame has the wrong shape");
  }
  for (int i = 0; i < frame.cols(); ++i) {
    frame.col(i) = TangentVector(q, frame.col(i)).components();
  }
  Chart chart(q, std::move(frame));
  if (condition_number(chart.gram()) > 1e24) {
    throw Error(ErrorKind::Validation, "frame vectors are dependent");
  }
  return chart;
}

bool Chart::is_orthonormal(double tol) const {
  return (gram_ - Mat::Identity(gram_.rows(), gram_.cols())).cwiseAbs().maxCoeff() <= tol;
}

Chart reframe(const Chart& x, const ChartJacobian& a) {
  if (a.dim() != x.dim()) throw Error(ErrorKind::Validation, "Jacobian dimension mismatch");
  return Chart::from_frame(x.base(), x.frame() * a.inverse());
}

SpdMatrix metric_at(const Chart& chart) { return SpdMatrix(chart.gram()); }

Vec components(const Chart& chart, const TangentVector& v) {
  if (!same_point(chart.base(), v.base())) {
    throw Error(ErrorKind::MismatchedBase, "vector and chart have different base points");
  }
  const int n = chart.dim();
  Vec b(n);
  for (int i = 0; i < n; ++i) b(i) = inner(chart.base(), chart.frame().col(i), v.components());
  if (chart.orthonormal()) return b;
  return chart.gram().ldlt().solve(b);
}

TangentVector from_components(const Chart& chart, const Vec& c) {
  if (c.size() != chart.dim()) throw Error(ErrorKind::Validation, "component count mismatch");
  return TangentVector(chart.base(), chart.frame() * c);
}

Vec transform_vector(const Vec& v_x, const ChartJacobian& a) {
  if (v_x.size() != a.dim()) throw Error(ErrorKind::Validation, "dimension mismatch");
  return a.matrix() * v_x;
}

SpdMatrix transform_metric(const SpdMatrix& g_x, const ChartJacobian& a) {
  return SpdMatrix(a.inverse().transpose() * g_x.matrix() * a.inverse());
}

SpdMatrix transform_contravariant(const SpdMatrix& w_x, const ChartJacobian& a) {
  return SpdMatrix(a.matrix() * w_x.matrix() * a.matrix().transpose());
}

Mat transform_operator(const Mat& l_x, const ChartJacobian& a) {
  return a.matrix() * l_x * a.inverse();
}

Mat transform_mixed(const Mat& tw_x, const ChartJacobian& a) {
  return a.inverse().transpose() * tw_x * a.matrix().transpose();
}

}  // namespace covfield
