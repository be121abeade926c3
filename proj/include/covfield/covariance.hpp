#pragma once

#include "covfield/chart.hpp"
#include "covfield/manifold.hpp"
#include "covfield/spd.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace covfield {

/// Amplitude function r inside the extended covariance integral:
/// r(t) = 1, or r(t; a) = (1 - a/t)^2.
class Amplitude {
 public:
  enum class Kind { Unit, OneMinusOverT };

  static Amplitude unit() { return Amplitude(Kind::Unit, 0.0); }
  static Amplitude one_minus_over_t(double a);
  /// "unit", "a=<v>" or "optimal:R=<v>".
  static Amplitude parse(std::string_view spec);

  Kind kind() const { return kind_; }
  double a() const { return a_; }
  std::string tag() const;

  /// r(t). Diverges at t = 0 for OneMinusOverT; use weighted_square there.
  double operator()(double t) const;
  /// t^2 r(t), which is (t - a)^2 for OneMinusOverT and finite at t = 0.
  double weighted_square(double t) const {
    if (kind_ == Kind::Unit) return t * t;
    if (t == 0.0) return 0.0;
    return (t - a_) * (t - a_);
  }
  /// Factor multiplying the outer product u u' of a log vector u of length t.
  /// Defined as 0 at t = 0.
  double outer_weight(double t) const;

  friend bool operator==(const Amplitude&, const Amplitude&) = default;

 private:
  Amplitude(Kind kind, double a) : kind_(kind), a_(a) {}

  Kind kind_;
  double a_;
};

/// a = R/2, the minimizer of R^2/3 - aR + a^2.
Amplitude optimal_amplitude(double geodesic_radius);
/// R (R^2/3 - aR + a^2) = integral_0^R (t - a)^2 dt.
double amplitude_trace_integral(double geodesic_radius, double a);

/// Discrete distribution: support points with weights on the simplex.
class Pmf {
 public:
  Pmf(std::vector<Point> support, Vec weights, double tol = 1e-12);

  static Pmf point_mass(const Point& p);
  static Pmf uniform(std::vector<Point> support);

  const std::vector<Point>& support() const { return support_; }
  const Vec& weights() const { return weights_; }
  int size() const { return static_cast<int>(support_.size()); }
  const Manifold& manifold() const { return support_.front().manifold(); }

 private:
  std::vector<Point> support_;
  Vec weights_;
};

/// Sigma(q) in a chart at q, with the amplitude used to build it.
struct CovarianceTensor {
  Point at;
  SpdMatrix sigma;
  Amplitude amplitude;
  /// Set when Sigma is singular (support collapsed onto a geodesic through q).
  bool degenerate = false;
};

/// Z_x(q, p) = c c' with c the chart components of log_q(p).
SpdMatrix z_tensor(const Point& q, const Point& p, const Chart& chart);
/// Z_x(q, p) r(d(q, p)).
SpdMatrix weighted_z_tensor(const Point& q, const Point& p, const Chart& chart,
                            const Amplitude& r);

/// Sigma(q; r) = sum_i f_i Z(q, p_i) r(d(q, p_i)). Raises CutLocus listing
/// every support index outside U(q).
CovarianceTensor covariance_at(const Point& q, const Pmf& f, const Amplitude& r,
                               const Chart& chart);
CovarianceTensor covariance_at(const Point& q, const Pmf& f, const Amplitude& r);

/// <w, (G Sigma)(v)> = w_x' G_x Sigma_x G_x v_x.
double operator_quadratic_form(const Chart& chart, const CovarianceTensor& sigma,
                               const TangentVector& v, const TangentVector& w);

/// Spectrum of the operator G Sigma (ascending); chart independent.
Vec operator_eigenvalues(const Chart& chart, const CovarianceTensor& sigma);

/// rho(q; r) = sum_i f_i d^2(q, p_i) r(d(q, p_i)) = tr(G Sigma(q; r)).
double trace_field(const Point& q, const Pmf& f, const Amplitude& r);

struct MeanOptions {
  double tol = 1e-10;
  int max_iter = 500;
  double step = 1.0;
};

struct MeanResult {
  Point mean;
  int iterations = 0;
  double gradient_norm = 0.0;
};

/// Frechet mean by q <- exp_q(tau sum_i f_i log_q p_i), halving tau when the
/// trace field fails to decrease. Throws NoConvergence after max_iter.
MeanResult intrinsic_mean(const Pmf& f, const Point& init, const MeanOptions& options = {});

struct ContinuityReport {
  std::vector<double> distances;
  std::vector<double> traces;
  /// Sigma in an orthonormal frame transported from q0, i.e. the matrix of
  /// quadratic forms <e_a, (G Sigma) e_b>.
  std::vector<Mat> forms;
  std::vector<Vec> eigenvalues;
  std::vector<double> trace_deviation;
  std::vector<double> form_deviation;
  std::vector<double> eigenvalue_deviation;
  double reference_trace = 0.0;
  /// Largest deviation over the second half of the trajectory.
  double tail_trace_deviation = 0.0;
  double tail_form_deviation = 0.0;
  double tail_eigenvalue_deviation = 0.0;
};

/// Evaluates tr(G Sigma), quadratic forms and eigenvalues along a trajectory
/// q_k -> q0 and their deviations from the values at q0.
ContinuityReport continuity_probe(const Pmf& f, const Point& q0, const Amplitude& r,
                                  const std::vector<Point>& trajectory);

}  // namespace covfield
