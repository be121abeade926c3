#include "covfield/experiments.hpp"

#include "covfield/error.hpp"
#include "covfield/log.hpp"
#include "covfield/sampling.hpp"

#include <cmath>
#include <exception>
#include <numbers>

namespace covfield {

double uniform_sphere_pair_expectation(const Amplitude& r) {
  constexpr double pi = std::numbers::pi;
  const double a = r.kind() == Amplitude::Kind::Unit ? 0.0 : r.a();
  // int_0^pi t^2 sin t = pi^2 - 4, int t sin t = pi, int sin t = 2.
  return 0.5 * ((pi * pi - 4.0) - 2.0 * a * pi + 2.0 * a * a);
}

DemoS2Report demo_s2(int k, std::uint64_t seed, const Amplitude& adjusted) {
  if (k < 3) throw Error(ErrorKind::Validation, "demo-s2 needs k >= 3");
  const EmpiricalSample sample = sample_uniform_sphere(k, seed);
  DemoS2Report rep;
  rep.k = k;
  rep.seed = seed;
  rep.adjusted = adjusted;
  rep.unit_stats = pairwise_trace_stats(sample.points, Amplitude::unit());
  rep.adjusted_stats = pairwise_trace_stats(sample.points, adjusted);
  rep.unit_target = uniform_sphere_pair_expectation(Amplitude::unit());
  rep.adjusted_target = uniform_sphere_pair_expectation(adjusted);
  rep.unit_z = (rep.unit_stats.mean - rep.unit_target) / rep.unit_stats.standard_error;
  rep.adjusted_z = (rep.adjusted_stats.mean - rep.adjusted_target) / rep.adjusted_stats.standard_error;
  rep.ratio = rep.unit_stats.mean / rep.adjusted_stats.mean;
  return rep;
}

RankScanReport rank_scan(const Manifold& m, int k, int trials, const Amplitude& r,
                         std::uint64_t seed, double rel_tol, double spread) {
  if (k < 1 || trials < 1) throw Error(ErrorKind::Validation, "k and trials must be positive");
  RankScanReport rep;
  rep.manifold = m;
  rep.k = k;
  rep.trials = trials;
  rep.amplitude = r;
  rep.rel_tol = rel_tol;
  rep.rows.resize(static_cast<std::size_t>(trials));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(trials));
  const Rng root(seed);
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < trials; ++t) {
    try {
      Rng rng = root.split(static_cast<std::uint64_t>(t));
      const std::vector<Point> pts = random_points(rng, m, k, spread);
      const Mat y = y_matrix(pts, pts, r, Backend::Serial);
      rep.rows[static_cast<std::size_t>(t)] = RankTrial{t, rank_diagnostic(y, rel_tol)};
    } catch (...) {
      errors[static_cast<std::size_t>(t)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  rep.min_rank = k;
  for (const auto& row : rep.rows) {
    rep.min_rank = std::min(rep.min_rank, row.report.rank);
    rep.max_rank = std::max(rep.max_rank, row.report.rank);
    if (row.report.rank == k) {
      ++rep.full_rank_count;
    } else if (m.curved()) {
      std::string spectrum;
      for (Eigen::Index i = 0; i < row.report.singular_values.size(); ++i) {
        spectrum += (i ? " " : "") + std::to_string(row.report.singular_values(i));
      }
      log_message(LogLevel::Info, "trial " + std::to_string(row.trial) + " rank " +
                                      std::to_string(row.report.rank) + ": " + spectrum);
    }
  }
  return rep;
}

SyntheticProblem synthetic_problem(const Manifold& m, int k, std::uint64_t seed, double spread) {
  if (k < 1) throw Error(ErrorKind::Validation, "k must be positive");
  Rng rng(seed);
  SyntheticProblem out;
  out.support = random_points(rng, m, k, spread);
  const double limit = m.injectivity_radius() - 0.01;
  for (int j = 0; j < k; ++j) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > 1000) throw Error(ErrorKind::Validation, "could not place observation points");
      Point q = random_point(rng, m, spread);
      bool ok = true;
      for (const auto& p : out.support) ok = ok && distance(q, p) < limit;
      if (ok) {
        out.observations.push_back(std::move(q));
        break;
      }
    }
  }
  out.truth = random_simplex(rng, k);
  return out;
}

std::vector<Point> make_grid(const Manifold& m, int resolution, double extent) {
  if (resolution < 1 || !(extent > 0.0)) {
    throw Error(ErrorKind::Validation, "grid resolution and extent must be positive");
  }
  std::vector<Point> out;
  const double two_pi = 2.0 * std::numbers::pi;
  switch (m.kind()) {
    case ManifoldKind::Euclidean: {
      const int n = m.dimension();
      for (int a = 0; a <= resolution; ++a) {
        for (int b = 0; b <= (n >= 2 ? resolution : 0); ++b) {
          Vec x = Vec::Zero(n);
          x(0) = -extent + 2.0 * extent * a / resolution;
          if (n >= 2) x(1) = -extent + 2.0 * extent * b / resolution;
          out.emplace_back(m, x);
        }
      }
      break;
    }
    case ManifoldKind::Sphere2:
    case ManifoldKind::Hyperbolic2: {
      const Point pole(m, Eigen::Vector3d::UnitZ());
      const Chart chart = Chart::orthonormal(pole);
      const double radius = m.kind() == ManifoldKind::Sphere2 ? std::min(extent, std::numbers::pi)
                                                              : extent;
      out.push_back(pole);
      for (int a = 1; a <= resolution; ++a) {
        const double rho = radius * a / resolution;
        for (int b = 0; b < resolution; ++b) {
          const double phi = two_pi * b / resolution;
          Vec c(2);
          c << rho * std::cos(phi), rho * std::sin(phi);
          out.push_back(exp_map(pole, from_components(chart, c), true));
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace covfield
