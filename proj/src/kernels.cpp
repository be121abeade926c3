#include "covfield/kernels.hpp"

#include "covfield/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

namespace covfield {

namespace {

struct Packed {
  Mat coords;
  ManifoldKind kind;
  int ambient;
};

Packed pack(const std::vector<Point>& points) {
  if (points.empty()) throw Error(ErrorKind::Validation, "empty point set");
  return Packed{pack_points(points), points.front().manifold().kind(),
                points.front().manifold().ambient_dimension()};
}

void require_same(const std::vector<Point>& a, const std::vector<Point>& b) {
  if (!(a.front().manifold() == b.front().manifold())) {
    throw Error(ErrorKind::Validation, "point sets live on different manifolds");
  }
}

// Runs body(i) for i in [0, n), serially or under OpenMP, and rethrows the
// exception of the lowest failing index.
template <class Body>
void for_each_index(long long n, Backend backend, Body body) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  if (backend == Backend::Parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (long long i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  } else {
    for (long long i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

Mat pack_points(const std::vector<Point>& points) {
  if (points.empty()) return Mat();
  const int ambient = points.front().manifold().ambient_dimension();
  Mat out(ambient, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = points[i].coords();
  }
  return out;
}

Mat y_matrix(const std::vector<Point>& support, const std::vector<Point>& observations,
             const Amplitude& r, Backend backend) {
  const Packed p = pack(support);
  const Packed q = pack(observations);
  require_same(support, observations);
  const auto np = p.coords.cols();
  Mat y(q.coords.cols(), np);
  for_each_index(q.coords.cols(), backend, [&](long long j) {
    for (Eigen::Index i = 0; i < np; ++i) {
      const double d = coordinate_distance(p.kind, q.coords.col(j).data(),
                                           p.coords.col(i).data(), p.ambient);
      y(j, i) = r.weighted_square(d);
    }
  });
  return y;
}

PairwiseStats pairwise_trace_stats(const std::vector<Point>& sample, const Amplitude& r,
                                   Backend backend) {
  const Packed s = pack(sample);
  const auto k = s.coords.cols();
  if (k < 3) throw Error(ErrorKind::Validation, "pairwise statistics need at least 3 points");
  Vec row_sum(k), row_sq(k);
  for_each_index(k, backend, [&](long long a) {
    double sum = 0.0, sq = 0.0;
    for (Eigen::Index b = 0; b < k; ++b) {
      if (b == a) continue;
      const double h = r.weighted_square(coordinate_distance(
          s.kind, s.coords.col(a).data(), s.coords.col(b).data(), s.ambient));
      sum += h;
      sq += h * h;
    }
    row_sum(a) = sum;
    row_sq(a) = sq;
  });

  const double kd = static_cast<double>(k);
  const double pairs = 0.5 * kd * (kd - 1.0);
  const double mean = 0.5 * row_sum.sum() / pairs;
  const double zeta2 = std::max(0.0, (0.5 * row_sq.sum() - pairs * mean * mean) / (pairs - 1.0));
  const Vec row_mean = row_sum / (kd - 1.0);
  const double var_rows = (row_mean.array() - mean).square().sum() / (kd - 1.0);
  const double zeta1 = std::max(0.0, var_rows - zeta2 / (kd - 1.0));
  PairwiseStats out;
  out.mean = mean;
  out.standard_error = std::sqrt(4.0 * zeta1 / kd + 2.0 * zeta2 / (kd * (kd - 1.0)));
  out.pairs = static_cast<long long>(pairs);
  return out;
}

SampleField sample_trace_field_with_variance(const std::vector<Point>& at, const Mat& packed_sample,
                                             const Amplitude& r, Backend backend) {
  if (at.empty() || packed_sample.cols() == 0) {
    throw Error(ErrorKind::Validation, "empty point set");
  }
  const Packed q = pack(at);
  if (packed_sample.rows() != q.ambient) {
    throw Error(ErrorKind::Validation, "sample has the wrong ambient dimension");
  }
  const auto n = packed_sample.cols();
  SampleField out{Vec(q.coords.cols()), Vec(q.coords.cols())};
  for_each_index(q.coords.cols(), backend, [&](long long j) {
    double sum = 0.0, sq = 0.0;
    for (Eigen::Index s = 0; s < n; ++s) {
      const double h = r.weighted_square(coordinate_distance(
          q.kind, q.coords.col(j).data(), packed_sample.col(s).data(), q.ambient));
      sum += h;
      sq += h * h;
    }
    const double nd = static_cast<double>(n);
    out.mean(j) = sum / nd;
    out.variance(j) = n > 1 ? std::max(0.0, (sq - nd * out.mean(j) * out.mean(j)) / (nd - 1.0))
                            : 0.0;
  });
  return out;
}

Vec sample_trace_field(const std::vector<Point>& at, const Mat& packed_sample, const Amplitude& r,
                       Backend backend) {
  return sample_trace_field_with_variance(at, packed_sample, r, backend).mean;
}

std::vector<FieldRow> field_grid(const Pmf& f, const std::vector<Point>& grid, const Amplitude& r,
                                 Backend backend) {
  std::vector<FieldRow> rows(grid.size());
  for_each_index(static_cast<long long>(grid.size()), backend, [&](long long g) {
    const Point& q = grid[static_cast<std::size_t>(g)];
    const Chart chart = Chart::orthonormal(q);
    const CovarianceTensor s = covariance_at(q, f, r, chart);
    FieldRow& row = rows[static_cast<std::size_t>(g)];
    row.q = q.coords();
    row.trace = trace_field(q, f, r);
    row.eigenvalues = operator_eigenvalues(chart, s);
    row.sigma = s.sigma.matrix();
    row.degenerate = s.degenerate;
  });
  return rows;
}

double max_log_ratio(const std::vector<Point>& q, const std::vector<Point>& a,
                     const std::vector<Point>& b, double min_separation, Backend backend) {
  if (q.size() != a.size() || q.size() != b.size()) {
    throw Error(ErrorKind::Validation, "triple lists differ in length");
  }
  Vec ratio = Vec::Zero(static_cast<Eigen::Index>(q.size()));
  for_each_index(static_cast<long long>(q.size()), backend, [&](long long t) {
    const auto i = static_cast<std::size_t>(t);
    const double d = distance(a[i], b[i]);
    if (d <= min_separation) return;
    const Vec diff = log_map(q[i], a[i]).components() - log_map(q[i], b[i]).components();
    ratio(t) = std::sqrt(std::max(0.0, inner(q[i], diff, diff))) / d;
  });
  return ratio.size() ? ratio.maxCoeff() : 0.0;
}

}  // namespace covfield
