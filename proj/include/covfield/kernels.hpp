#pragma once

#include "covfield/covariance.hpp"

#include <vector>

namespace covfield {

/// Serial kernels are the reference; the OpenMP versions must reproduce
/// them bit for bit. Per-row results are written to fixed slots and any
/// reduction across rows runs serially in index order afterwards.
enum class Backend { Serial, Parallel };

/// Ambient coordinates of the points as columns.
Mat pack_points(const std::vector<Point>& points);

/// Y_ji = d^2(q_j, p_i) r(d(q_j, p_i)).
Mat y_matrix(const std::vector<Point>& support, const std::vector<Point>& observations,
             const Amplitude& r, Backend backend = Backend::Parallel);

struct PairwiseStats {
  double mean = 0.0;
  /// Standard error of the U-statistic: sqrt(4 zeta1 / k + 2 zeta2 / (k (k-1))).
  double standard_error = 0.0;
  long long pairs = 0;
};

/// Mean of d^2(y_a, y_b) r(d(y_a, y_b)) over unordered pairs a < b.
PairwiseStats pairwise_trace_stats(const std::vector<Point>& sample, const Amplitude& r,
                                   Backend backend = Backend::Parallel);

/// rho_j = mean_s d^2(q_j, y_s) r(d(q_j, y_s)): the trace field of the
/// empirical distribution of `sample`, at each q_j.
Vec sample_trace_field(const std::vector<Point>& at, const Mat& packed_sample,
                       const Amplitude& r, Backend backend = Backend::Parallel);

/// Same, with the per-q sample variance of the summand (for adaptive MC).
struct SampleField {
  Vec mean;
  Vec variance;
};
SampleField sample_trace_field_with_variance(const std::vector<Point>& at, const Mat& packed_sample,
                                             const Amplitude& r,
                                             Backend backend = Backend::Parallel);

struct FieldRow {
  Vec q;
  double trace = 0.0;
  Vec eigenvalues;
  Mat sigma;
  bool degenerate = false;
};

/// Covariance tensor at each grid point in its orthonormal chart.
std::vector<FieldRow> field_grid(const Pmf& f, const std::vector<Point>& grid, const Amplitude& r,
                                 Backend backend = Backend::Parallel);

/// max over triples of |log_q a - log_q b| / d(a, b); pairs with
/// d(a, b) <= min_separation are skipped.
double max_log_ratio(const std::vector<Point>& q, const std::vector<Point>& a,
                     const std::vector<Point>& b, double min_separation,
                     Backend backend = Backend::Parallel);

}  // namespace covfield
