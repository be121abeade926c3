#include "covfield/recovery.hpp"

#include "covfield/error.hpp"
#include "covfield/kernels.hpp"
#include "covfield/log.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace covfield {

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double spectral_norm(const Mat& m) { return singular_values(m)(0); }

Point north_pole() { return Point(Manifold::sphere2(), Eigen::Vector3d::UnitZ()); }

}  // namespace

SpdMatrix perturb_tensor(Rng& rng, const SpdMatrix& c, double eps) {
  if (eps < 0.0) throw Error(ErrorKind::Validation, "noise level must be nonnegative");
  if (eps == 0.0) return c;
  const int n = c.dim();
  Mat g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  }
  const Mat s = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  const double scale = eps / es.eigenvalues().cwiseAbs().maxCoeff();
  const Vec e = (scale * es.eigenvalues()).array().exp().matrix();
  const Mat expm = es.eigenvectors() * e.asDiagonal() * es.eigenvectors().transpose();
  return SpdMatrix(expm * c.matrix() * expm.transpose());
}

ConsistencyReport consistency_experiment(const Vec& f0, const std::vector<Point>& support,
                                         const ObservationSet& q,
                                         const ConsistencyOptions& options) {
  if (options.noise.empty() || options.seeds < 1) {
    throw Error(ErrorKind::Validation, "consistency experiment needs noise levels and seeds");
  }
  const Pmf truth(support, f0);
  const CovarianceSet c0 = forward_covariance_set(truth, q, options.amplitude);
  const RecoveryProblem p0(c0, support, options.solver.kind);
  const int n = support.front().manifold().dimension();
  const double alpha = 2.0 * n * (n + 1);
  double gamma_y = 0.0, gamma_c0 = 0.0;
  for (int j = 0; j < q.size(); ++j) {
    gamma_c0 = std::max(gamma_c0, spectral_norm(c0.tensors[j].matrix()));
    for (std::size_t i = 0; i < support.size(); ++i) {
      gamma_y = std::max(gamma_y, spectral_norm(weighted_z_tensor(q.points[j], support[i],
                                                                  q.charts[j], options.amplitude)
                                                    .matrix()));
    }
  }

  ConsistencyReport rep;
  rep.noise = options.noise;
  const std::size_t levels = options.noise.size();
  rep.h_deviation.assign(levels, 0.0);
  rep.h_bound.assign(levels, 0.0);
  const Rng root(options.seed);
  for (int s = 0; s < options.seeds; ++s) {
    Rng rng = root.split(static_cast<std::uint64_t>(s));
    std::vector<double> errs;
    for (std::size_t m = 0; m < levels; ++m) {
      CovarianceSet cm = c0;
      double max_dc = 0.0, gamma = std::max(gamma_y, gamma_c0);
      for (int j = 0; j < q.size(); ++j) {
        cm.tensors[j] = perturb_tensor(rng, c0.tensors[j], options.noise[m]);
        max_dc = std::max(max_dc, spectral_norm(cm.tensors[j].matrix() - c0.tensors[j].matrix()));
        gamma = std::max(gamma, spectral_norm(cm.tensors[j].matrix()));
      }
      const RecoveryProblem pm(cm, support, options.solver.kind);
      const RecoveryResult res = solve(pm, options.solver);
      errs.push_back((res.weights - f0).norm());

      if (options.solver.kind == InvariantKind::TrDifSq) {
        // sup over f approximated by the vertices plus random simplex draws.
        double dev = 0.0;
        const int k = static_cast<int>(support.size());
        for (int trial = 0; trial < k + 200; ++trial) {
          const Vec f = trial < k ? Vec(Vec::Unit(k, trial)) : random_simplex(rng, k);
          dev = std::max(dev, std::abs(pm.value(f) - p0.value(f)));
        }
        const double bound = alpha * gamma * max_dc;
        rep.h_deviation[m] = std::max(rep.h_deviation[m], dev);
        rep.h_bound[m] = std::max(rep.h_bound[m], bound);
        if (dev > bound * (1.0 + 1e-12) + 1e-15) rep.bound_holds = false;
      }
    }
    rep.errors.push_back(std::move(errs));
  }

  for (std::size_t m = 0; m < levels; ++m) {
    std::vector<double> col;
    for (const auto& row : rep.errors) col.push_back(row[m]);
    rep.median_error.push_back(median(col));
    if (options.noise[m] > 0.0) {
      rep.fitted_rate = std::max(rep.fitted_rate, rep.median_error[m] / options.noise[m]);
    }
  }
  rep.median_monotone = true;
  for (std::size_t m = 1; m < levels; ++m) {
    if (!(rep.median_error[m] < rep.median_error[m - 1])) rep.median_monotone = false;
  }
  return rep;
}

ContinuousTarget ContinuousTarget::uniform_cap(double radius) {
  ContinuousTarget t;
  t.name = "uniform-cap";
  t.sample = [radius](Rng& rng) { return covfield::uniform_cap(rng, north_pole(), radius); };
  const double total = 2.0 * std::numbers::pi * (1.0 - std::cos(radius));
  t.cell_mass = [total](const CapPartition&, const CapCell& cell) { return cell.area / total; };
  return t;
}

ContinuousTarget ContinuousTarget::concentric_mixture(double outer, double inner) {
  if (!(inner > 0.0) || !(inner < outer) || !(outer < std::numbers::pi)) {
    throw Error(ErrorKind::Validation, "mixture needs 0 < inner < outer < pi");
  }
  ContinuousTarget t;
  t.name = "concentric-mixture";
  t.sample = [outer, inner](Rng& rng) {
    const double radius = rng.uniform() < 0.5 ? outer : inner;
    return covfield::uniform_cap(rng, north_pole(), radius);
  };
  t.cell_mass = [outer, inner](const CapPartition&, const CapCell& cell) {
    // Cells are polar rectangles, so the overlap with a polar cap is exact.
    auto share = [&cell](double rho) {
      if (cell.theta0 >= rho) return 0.0;
      const double band = std::cos(cell.theta0) - std::cos(std::min(cell.theta1, rho));
      return (cell.phi1 - cell.phi0) * band / (2.0 * std::numbers::pi * (1.0 - std::cos(rho)));
    };
    return 0.5 * share(outer) + 0.5 * share(inner);
  };
  return t;
}

ContinuousTarget ContinuousTarget::point_mass(const Point& p) {
  ContinuousTarget t;
  t.name = "point-mass";
  t.sample = [p](Rng&) { return p; };
  t.cell_mass = [p](const CapPartition& part, const CapCell& cell) {
    const int idx = part.locate(p);
    return idx >= 0 && &part.cells[static_cast<std::size_t>(idx)] == &cell ? 1.0 : 0.0;
  };
  t.atom = p;
  return t;
}

ContinuousReport continuous_recovery(const ContinuousTarget& target,
                                     const ContinuousOptions& options) {
  if (options.resolution < 1) throw Error(ErrorKind::Validation, "resolution m must be >= 1");
  ContinuousReport rep;
  rep.partition = partition_cap(options.cap_radius, 1.0 / options.resolution);
  const auto& cells = rep.partition.cells;
  const Rng root(options.seed);
  Rng place_rng = root.split(1);
  Rng mc_rng = root.split(2);

  rep.true_masses.resize(static_cast<Eigen::Index>(cells.size()));
  for (std::size_t c = 0; c < cells.size(); ++c) {
    rep.representatives.push_back(options.placement == Placement::CellCenter
                                      ? cells[c].center()
                                      : cells[c].sample(place_rng));
    rep.true_masses(static_cast<Eigen::Index>(c)) = target.cell_mass(rep.partition, cells[c]);
  }

  // Monte Carlo field of the target, grown until its standard error is
  // small against the O(1/m^2) discretization error.
  std::vector<Point> draws;
  const auto cells_n = static_cast<Eigen::Index>(cells.size());
  Vec sum = Vec::Zero(cells_n), sq = Vec::Zero(cells_n);
  Vec mean(cells_n);
  const double m2 = static_cast<double>(options.resolution) * options.resolution;
  long long want = target.atom ? 1 : options.mc_min;
  while (true) {
    const auto done = static_cast<long long>(draws.size());
    std::vector<Point> batch;
    while (done + static_cast<long long>(batch.size()) < want) batch.push_back(target.sample(mc_rng));
    // Only the new draws are evaluated; running sums carry the rest.
    const SampleField part = sample_trace_field_with_variance(rep.representatives, pack_points(batch),
                                                              options.amplitude);
    const double b = static_cast<double>(batch.size());
    sum += b * part.mean;
    sq += (b - 1.0) * part.variance + b * part.mean.cwiseProduct(part.mean);
    draws.insert(draws.end(), std::make_move_iterator(batch.begin()),
                 std::make_move_iterator(batch.end()));
    const double n = static_cast<double>(draws.size());
    mean = sum / n;
    const Vec var = n > 1 ? Vec(((sq - n * mean.cwiseProduct(mean)) / (n - 1.0)).cwiseMax(0.0))
                          : Vec(Vec::Zero(cells_n));
    rep.mc_max_se = (var / n).cwiseSqrt().maxCoeff();
    if (target.atom || rep.mc_max_se <= options.mc_rel / m2 || want >= options.mc_max) break;
    want = std::min(options.mc_max, 2 * want);
  }
  rep.mc_draws = static_cast<long long>(draws.size());
  log_message(LogLevel::Info, "continuous recovery m=" + std::to_string(options.resolution) +
                                  " cells=" + std::to_string(cells.size()) +
                                  " draws=" + std::to_string(rep.mc_draws));

  SolverOptions solver = options.solver;
  solver.kind = options.kind;
  const Mat y = y_matrix(rep.representatives, rep.representatives, options.amplitude);
  rep.rank = rank_diagnostic(y, solver.rank_tol);
  if (options.kind == InvariantKind::TrDifSq) {
    rep.solver = solve(RecoveryProblem::trace_only(y, mean), solver);
  } else {
    // Full tensors from the same draws, as an empirical distribution.
    const Pmf empirical = Pmf::uniform(draws);
    const ObservationSet q = ObservationSet::from_points(rep.representatives);
    const CovarianceSet c = forward_covariance_set(empirical, q, options.amplitude);
    rep.solver = recover_pmf(c, rep.representatives, solver);
  }
  rep.solver.rank = rep.rank;
  rep.solver.rank_deficient = !rep.rank.full_rank;
  rep.recovered = rep.solver.weights;
  rep.total_variation = 0.5 * (rep.recovered - rep.true_masses).cwiseAbs().sum();
  return rep;
}

LipschitzReport lipschitz_probe(double diameter, long long samples, std::uint64_t seed) {
  if (!(diameter > 0.0) || diameter >= std::numbers::pi) {
    throw Error(ErrorKind::Validation, "ball diameter must lie in (0, pi)");
  }
  if (samples < 1) throw Error(ErrorKind::Validation, "sample count must be positive");
  Rng rng(seed);
  const Point center = north_pole();
  std::vector<Point> q, a, b;
  q.reserve(samples);
  a.reserve(samples);
  b.reserve(samples);
  for (long long s = 0; s < samples; ++s) {
    q.push_back(uniform_cap(rng, center, diameter / 2));
    a.push_back(uniform_cap(rng, center, diameter / 2));
    b.push_back(uniform_cap(rng, center, diameter / 2));
  }
  LipschitzReport rep;
  rep.diameter = diameter;
  rep.samples = samples;
  rep.empirical_beta = max_log_ratio(q, a, b, 1e-9);
  rep.bound = diameter / std::sin(diameter);
  return rep;
}

}  // namespace covfield
