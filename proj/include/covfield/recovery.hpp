#pragma once

#include "covfield/covariance.hpp"
#include "covfield/partition.hpp"
#include "covfield/sampling.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace covfield {

/// Observation points q_j, each with its own orthonormal chart.
struct ObservationSet {
  std::vector<Point> points;
  std::vector<Chart> charts;

  static ObservationSet from_points(std::vector<Point> points);
  int size() const { return static_cast<int>(points.size()); }
};

/// Entries d^2(q_j, p_i) r(d(q_j, p_i)), rows indexed by observation.
struct YMatrix {
  Mat entries;
  Amplitude amplitude = Amplitude::unit();
};

/// Observed tensors C_j, in the chart of q_j.
struct CovarianceSet {
  ObservationSet observations;
  std::vector<SpdMatrix> tensors;
  Amplitude amplitude = Amplitude::unit();
};

CovarianceSet forward_covariance_set(const Pmf& f, const ObservationSet& q, const Amplitude& r);
YMatrix build_y_matrix(const std::vector<Point>& support, const ObservationSet& q,
                       const Amplitude& r);

struct RankReport {
  int rank = 0;
  Vec singular_values;
  bool full_rank = false;
  /// Smallest singular value counted in the rank.
  double smallest_retained = 0.0;
};

RankReport rank_diagnostic(const Mat& y, double rel_tol = 1e-9);

/// H(f) = (1/k) sum_j h(Sigma[f]_j, C_j) with Sigma[f]_j = sum_i f_i Y_ji.
/// The design tensors Y_ji are built once.
class RecoveryProblem {
 public:
  RecoveryProblem(const CovarianceSet& c, const std::vector<Point>& support, InvariantKind kind);
  /// TrDifSq on traces only: rows of `traces` are tr Y_ji, `targets` are tr C_j.
  static RecoveryProblem trace_only(Mat traces, Vec targets);

  int k() const { return static_cast<int>(traces_.cols()); }
  int observations() const { return static_cast<int>(traces_.rows()); }
  InvariantKind kind() const { return kind_; }
  /// The matrix of tr Y_ji, i.e. the Y matrix in an orthonormal frame.
  const Mat& traces() const { return traces_; }

  struct Evaluation {
    double value = 0.0;
    /// Observation indices whose Sigma[f]_j needed the PSD ridge.
    std::vector<int> ridged;
  };

  Mat sigma(const Vec& f, int j) const;
  Evaluation evaluate(const Vec& f) const;
  double value(const Vec& f) const { return evaluate(f).value; }
  /// Analytic gradient; TrDifSq, Lik and TrSq only.
  Vec gradient(const Vec& f) const;
  /// Analytic Hessian; TrDifSq, Lik and TrSq only.
  Mat hessian(const Vec& f) const;

 private:
  RecoveryProblem() = default;
  void check_weights(const Vec& f) const;
  // Sigma[f]_j with the ridge applied when it is singular.
  Mat regularized_sigma(const Vec& f, int j, bool* ridged) const;

  InvariantKind kind_ = InvariantKind::TrDifSq;
  int n_ = 0;
  std::vector<std::vector<Mat>> y_;  // y_[j][i]
  std::vector<Mat> c_;
  std::vector<Mat> c_inv_;
  std::vector<Mat> c_inv_sqrt_;
  Mat traces_;
  Vec targets_;
};

double objective(const Vec& f, const CovarianceSet& c, const std::vector<Point>& support,
                 InvariantKind kind);
Vec objective_gradient(const Vec& f, const CovarianceSet& c, const std::vector<Point>& support,
                       InvariantKind kind);

/// Euclidean projection onto the probability simplex.
Vec project_simplex(const Vec& v);
/// || f - P(f - g) ||, zero exactly at constrained stationary points.
double projected_gradient_norm(const Vec& f, const Vec& g);

enum class SolverMethod { ProjectedNewton, ProjectedGradient };

struct SolverOptions {
  InvariantKind kind = InvariantKind::TrDifSq;
  int max_iter = 5000;
  double grad_tol = 1e-12;
  double step_init = 1.0;
  std::uint64_t seed = 0;
  SolverMethod method = SolverMethod::ProjectedNewton;
  double rank_tol = 1e-9;
  /// Starting weights; empty means uniform 1/k.
  Vec initial;
};

struct RecoveryResult {
  Vec weights;
  double h_value = 0.0;
  int iterations = 0;
  bool converged = false;
  bool rank_deficient = false;
  bool ridge_applied = false;
  RankReport rank;
  std::vector<double> history;
};

/// Minimizes H over the simplex: f <- f + t (x - f) where x solves the
/// quadratic model over the simplex (active-set QP) and t backtracks
/// (Armijo 1e-4), or plain projected gradient with the same line search.
RecoveryResult solve(const RecoveryProblem& problem, const SolverOptions& options);
RecoveryResult recover_pmf(const CovarianceSet& c, const std::vector<Point>& support,
                           const SolverOptions& options);

/// Minimizer of 1/2 x'Hx + c'x over the simplex, warm-started at `start`.
Vec simplex_qp(const Mat& h, const Vec& c, const Vec& start);

struct ConsistencyOptions {
  std::vector<double> noise;  // epsilon_m
  int seeds = 20;
  std::uint64_t seed = 0;
  Amplitude amplitude = Amplitude::unit();
  SolverOptions solver;
};

struct ConsistencyReport {
  std::vector<double> noise;
  /// errors[s][m] = || f_hat - f0 || for seed s, level m.
  std::vector<std::vector<double>> errors;
  std::vector<double> median_error;
  bool median_monotone = false;
  /// max_m median_error[m] / noise[m] over positive levels.
  double fitted_rate = 0.0;
  /// sup_f |H_m - H_0| and the bound alpha gamma max_j ||C_m - C_0|| (TrDifSq).
  std::vector<double> h_deviation;
  std::vector<double> h_bound;
  bool bound_holds = true;
};

/// C_j^m = E C_j^0 E' with E = expm(S), S symmetric of spectral norm eps_m.
SpdMatrix perturb_tensor(Rng& rng, const SpdMatrix& c, double eps);

ConsistencyReport consistency_experiment(const Vec& f0, const std::vector<Point>& support,
                                         const ObservationSet& q,
                                         const ConsistencyOptions& options);

enum class Placement { UniformRandom, CellCenter };

/// Distribution to recover: a sampler plus its exact cell masses.
struct ContinuousTarget {
  std::string name;
  std::function<Point(Rng&)> sample;
  std::function<double(const CapPartition&, const CapCell&)> cell_mass;
  /// Point-mass targets are evaluated exactly, not by Monte Carlo.
  std::optional<Point> atom;

  static ContinuousTarget uniform_cap(double radius);
  /// Equal mixture of the uniform distributions on two caps about the pole.
  static ContinuousTarget concentric_mixture(double outer, double inner);
  static ContinuousTarget point_mass(const Point& p);
};

struct ContinuousOptions {
  double cap_radius = 1.0;
  int resolution = 1;
  InvariantKind kind = InvariantKind::TrDifSq;
  Placement placement = Placement::UniformRandom;
  Amplitude amplitude = Amplitude::unit();
  std::uint64_t seed = 0;
  /// Monte Carlo draws start at mc_min and double until every field value
  /// has standard error <= mc_rel / m^2, or mc_max is reached.
  long long mc_min = 200000;
  long long mc_max = 1600000;
  double mc_rel = 0.01;
  SolverOptions solver;
};

struct ContinuousReport {
  CapPartition partition;
  std::vector<Point> representatives;
  Vec recovered;
  Vec true_masses;
  double total_variation = 0.0;
  long long mc_draws = 0;
  double mc_max_se = 0.0;
  RankReport rank;
  RecoveryResult solver;
};

ContinuousReport continuous_recovery(const ContinuousTarget& target,
                                     const ContinuousOptions& options);

struct LipschitzReport {
  double empirical_beta = 0.0;
  double bound = 0.0;
  double diameter = 0.0;
  long long samples = 0;
};

/// Samples (q, p1, p2) uniformly on the S^2 ball of diameter rho about the
/// north pole and returns max |log_q p1 - log_q p2| / d(p1, p2).
LipschitzReport lipschitz_probe(double diameter, long long samples, std::uint64_t seed);

}  // namespace covfield
