#include "covfield/experiments.hpp"
#include "covfield/log.hpp"
#include "covfield/recovery.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace covfield;
using covfield::testing::kind_of;
using covfield::testing::pt;
using covfield::testing::vec;

namespace {

constexpr double pi = std::numbers::pi;

const std::vector<InvariantKind> kSmooth{InvariantKind::TrDifSq, InvariantKind::Lik, InvariantKind::TrSq};

struct Setup {
  SyntheticProblem sp;
  ObservationSet obs;
  CovarianceSet c;
};

Setup make_setup(const Manifold& m, int k, std::uint64_t seed, const Amplitude& r = Amplitude::unit(),
                 double spread = -1.0) {
  Setup s{synthetic_problem(m, k, seed, spread), {}, {}};
  s.obs = ObservationSet::from_points(s.sp.observations);
  s.c = forward_covariance_set(Pmf(s.sp.support, s.sp.truth), s.obs, r);
  return s;
}

// A direction inside the simplex tangent space.
Vec simplex_direction(Rng& rng, int k) {
  Vec d = random_simplex(rng, k) - random_simplex(rng, k);
  return d / d.norm();
}

// tau with sum max(v - tau, 0) = 1, by bisection.
Vec bisection_projection(const Vec& v) {
  double lo = v.minCoeff() - 1.0, hi = v.maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    ((v.array() - mid).max(0.0).sum() > 1.0 ? lo : hi) = mid;
  }
  return (v.array() - 0.5 * (lo + hi)).max(0.0).matrix();
}

}  // namespace

TEST_CASE("forward covariance set and Y matrix") {
  const auto s2 = Manifold::sphere2();
  const std::vector<Point> support{pt(s2, {1, 0, 0}), pt(s2, {0, 1, 0})};
  const ObservationSet q = ObservationSet::from_points({pt(s2, {0, 0, 1}), pt(s2, {1, 0, 0})});
  const YMatrix y = build_y_matrix(support, q, Amplitude::unit());
  const double h = pi * pi / 4;
  CHECK(y.entries(0, 0) == doctest::Approx(h));
  CHECK(y.entries(0, 1) == doctest::Approx(h));
  CHECK(y.entries(1, 0) == 0.0);
  CHECK(y.entries(1, 1) == doctest::Approx(h));
  const CovarianceSet c = forward_covariance_set(Pmf(support, vec({0.25, 0.75})), q, Amplitude::unit());
  REQUIRE(c.tensors.size() == 2);
  CHECK(c.tensors[0].trace() == doctest::Approx(h));
  CHECK(c.tensors[1].trace() == doctest::Approx(0.75 * h));
  CHECK(c.tensors[1].matrix().determinant() == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("rank of Y") {
  Rng rng(21);
  // In R^n with r = 1 the columns live in span{1, q, |q|^2}.
  for (int n : {2, 3}) {
    const auto m = Manifold::euclidean(n);
    const auto p = random_points(rng, m, 12), q = random_points(rng, m, 12);
    const RankReport rr = rank_diagnostic(y_matrix(p, q, Amplitude::unit()));
    CHECK(rr.rank == n + 2);
    CHECK_FALSE(rr.full_rank);
    // (d - a)^2 contains d itself, which breaks the polynomial ceiling.
    const RankReport fixed = rank_diagnostic(y_matrix(p, q, Amplitude::one_minus_over_t(1.0)));
    CHECK(fixed.rank == 12);
  }
  for (const auto& m : {Manifold::sphere2(), Manifold::hyperbolic2()}) {
    int full = 0;
    for (int t = 0; t < 20; ++t) {
      const auto s = make_setup(m, 10, 100 + t);
      full += rank_diagnostic(build_y_matrix(s.sp.support, s.obs, Amplitude::unit()).entries).full_rank;
    }
    CHECK(full == 20);
  }
  const RankReport zero = rank_diagnostic(Mat::Zero(3, 3));
  CHECK(zero.rank == 0);
}

TEST_CASE("objective vanishes at an exact fit") {
  for (const auto& m : covfield::testing::all_manifolds()) {
    const Setup s = make_setup(m, 6, 7, Amplitude::one_minus_over_t(0.3), 1.0);
    for (auto kind : {InvariantKind::TrDifSq, InvariantKind::TrDif, InvariantKind::Lik, InvariantKind::TrSq,
                      InvariantKind::TrLn2}) {
      CAPTURE(to_string(kind));
      CHECK(std::abs(objective(s.sp.truth, s.c, s.sp.support, kind)) <= 1e-8);
    }
    const int n = m.dimension();
    CHECK(objective(s.sp.truth, s.c, s.sp.support, InvariantKind::LnPr) ==
          doctest::Approx(std::log(double(n * n))).epsilon(1e-8));
  }
}

TEST_CASE("objective grows with a tensor perturbation") {
  const Setup s = make_setup(Manifold::sphere2(), 8, 3);
  for (auto kind : kSmooth) {
    CovarianceSet c = s.c;
    double prev = 0.0;
    for (double eps : {1e-3, 1e-2, 1e-1}) {
      for (std::size_t j = 0; j < c.tensors.size(); ++j) {
        c.tensors[j] = SpdMatrix(s.c.tensors[j].matrix() + eps * Mat::Identity(2, 2));
      }
      const double v = objective(s.sp.truth, c, s.sp.support, kind);
      CHECK(v > prev);
      prev = v;
    }
  }
}

TEST_CASE("analytic derivatives match finite differences") {
  Rng rng(22);
  for (const auto& m : covfield::testing::all_manifolds()) {
    const Setup s = make_setup(m, 7, 11, Amplitude::unit(), 1.0);
    for (auto kind : kSmooth) {
      CAPTURE(to_string(kind));
      const RecoveryProblem p(s.c, s.sp.support, kind);
      for (int t = 0; t < 5; ++t) {
        const Vec f = 0.5 * random_simplex(rng, 7) + 0.5 * Vec::Constant(7, 1.0 / 7);
        const Vec d = simplex_direction(rng, 7);
        const double h = 1e-5;
        const double fp = p.value(f + h * d), fm = p.value(f - h * d), f0 = p.value(f);
        const double g_fd = (fp - fm) / (2 * h);
        const double g = p.gradient(f).dot(d);
        CHECK(std::abs(g - g_fd) <= 1e-6 * std::max(1.0, std::abs(g)));
        const double hd = 1e-4;
        const double h_fd = (p.value(f + hd * d) - 2 * f0 + p.value(f - hd * d)) / (hd * hd);
        const double hv = d.dot(p.hessian(f) * d);
        CHECK(std::abs(hv - h_fd) <= 1e-4 * std::max(1.0, std::abs(hv)));
      }
      // Stationary at the truth.
      CHECK(projected_gradient_norm(s.sp.truth, p.gradient(s.sp.truth)) <= 1e-9);
    }
  }
}

TEST_CASE("trdifsq Hessian closed form and convexity") {
  Rng rng(23);
  const Setup s = make_setup(Manifold::hyperbolic2(), 6, 5, Amplitude::one_minus_over_t(0.5));
  const RecoveryProblem p(s.c, s.sp.support, InvariantKind::TrDifSq);
  Mat t(6, 6);
  const Amplitude r = Amplitude::one_minus_over_t(0.5);
  for (int j = 0; j < 6; ++j) {
    for (int i = 0; i < 6; ++i) {
      const double d = distance(s.sp.observations[j], s.sp.support[i]);
      t(j, i) = d * d * r(d);
    }
  }
  const Mat oracle = (2.0 / 6.0) * t.transpose() * t;
  const Mat hess = p.hessian(Vec::Constant(6, 1.0 / 6));
  CHECK((hess - oracle).norm() <= 1e-10 * oracle.norm());
  for (int trial = 0; trial < 200; ++trial) {
    const Vec a = random_simplex(rng, 6), b = random_simplex(rng, 6);
    CHECK(p.value(0.5 * (a + b)) <= 0.5 * (p.value(a) + p.value(b)) + 1e-12);
  }
}

TEST_CASE("solver on two-point supports agrees with a grid") {
  for (const auto& m : covfield::testing::all_manifolds()) {
    // Two rank-one terms cannot make Sigma positive definite in three dimensions.
    if (m.dimension() > 2) continue;
    for (auto kind : kSmooth) {
      CAPTURE(m.tag());
      CAPTURE(to_string(kind));
      Setup s = make_setup(m, 2, 31, Amplitude::unit(), 1.0);
      // Shifted targets: strictly positive, and the minimizer is not the truth.
      for (auto& c : s.c.tensors) c = SpdMatrix(c.matrix() + 0.05 * Mat::Identity(c.dim(), c.dim()));
      const RecoveryProblem p(s.c, s.sp.support, kind);
      SolverOptions opt;
      opt.kind = kind;
      const RecoveryResult res = solve(p, opt);
      double best = 1e300, arg = 0.0;
      for (int i = 0; i <= 100000; ++i) {
        const double t = i / 100000.0;
        const double v = p.value(vec({t, 1 - t}));
        if (v < best) {
          best = v;
          arg = t;
        }
      }
      CHECK(res.converged);
      CHECK(res.h_value <= best + 1e-12);
      CHECK(std::abs(res.weights(0) - arg) <= 1e-3);
    }
  }
}

TEST_CASE("solver recovers synthetic truth") {
  for (const auto& m : covfield::testing::all_manifolds()) {
    for (auto kind : kSmooth) {
      CAPTURE(m.tag());
      CAPTURE(to_string(kind));
      const Setup s = make_setup(m, 5, 41, Amplitude::one_minus_over_t(0.5), 1.0);
      SolverOptions opt;
      opt.kind = kind;
      const RecoveryResult res = recover_pmf(s.c, s.sp.support, opt);
      CHECK(res.converged);
      CHECK((res.weights - s.sp.truth).norm() <= 1e-6);
      for (std::size_t i = 1; i < res.history.size(); ++i) CHECK(res.history[i] <= res.history[i - 1] + 1e-15);
    }
  }
}

TEST_CASE("every iterate is feasible") {
  const Setup s = make_setup(Manifold::sphere2(), 10, 51);
  // Early stops are expected here; keep the warnings out of the test log.
  const LogLevel saved = log_level();
  set_log_level(LogLevel::Quiet);
  for (auto method : {SolverMethod::ProjectedNewton, SolverMethod::ProjectedGradient}) {
    for (int iters = 1; iters <= 15; ++iters) {
      SolverOptions opt;
      opt.kind = InvariantKind::Lik;
      opt.method = method;
      opt.max_iter = iters;
      const RecoveryResult res = recover_pmf(s.c, s.sp.support, opt);
      CHECK(res.weights.minCoeff() >= 0.0);
      CHECK(std::abs(res.weights.sum() - 1.0) <= 1e-12);
      CHECK(res.iterations <= iters);
    }
  }
  set_log_level(saved);
}

TEST_CASE("simplex projection") {
  Rng rng(61);
  for (int t = 0; t < 500; ++t) {
    const int k = 2 + t % 9;
    Vec v(k);
    for (int i = 0; i < k; ++i) v(i) = 3.0 * (rng.uniform() - 0.5);
    const Vec p = project_simplex(v);
    CHECK((p - bisection_projection(v)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(p.minCoeff() >= 0.0);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    CHECK((project_simplex(p) - p).cwiseAbs().maxCoeff() <= 1e-14);
  }
  const Vec f = vec({0.2, 0.3, 0.5});
  CHECK(projected_gradient_norm(f, Vec::Constant(3, 4.0)) <= 1e-15);
}

TEST_CASE("simplex QP satisfies KKT") {
  Rng rng(62);
  for (int t = 0; t < 200; ++t) {
    const int k = 2 + t % 8;
    const Mat a = Mat::NullaryExpr(k, k, [&] { return rng.uniform() - 0.5; });
    const Mat h = a * a.transpose() + 1e-3 * Mat::Identity(k, k);
    const Vec c = Vec::NullaryExpr(k, [&] { return rng.uniform() - 0.5; });
    const Vec x = simplex_qp(h, c, Vec::Constant(k, 1.0 / k));
    CHECK(x.minCoeff() >= 0.0);
    CHECK(std::abs(x.sum() - 1.0) <= 1e-12);
    const Vec g = h * x + c;
    double lambda = 1e300;
    for (int i = 0; i < k; ++i) {
      if (x(i) > 1e-12) lambda = std::min(lambda, g(i));
    }
    for (int i = 0; i < k; ++i) {
      if (x(i) > 1e-12) CHECK(std::abs(g(i) - lambda) <= 1e-9);
      CHECK(g(i) >= lambda - 1e-9);
    }
  }
}

TEST_CASE("distinct pmfs with one covariance field in R^2") {
  // Sigma depends on f only through its first and second moments.
  Rng rng(71);
  const auto r2 = Manifold::euclidean(2);
  const int k = 10;
  const auto support = random_points(rng, r2, k);
  Mat moments(6, k);
  for (int i = 0; i < k; ++i) {
    const Vec p = support[i].coords();
    moments.col(i) << 1.0, p(0), p(1), p(0) * p(0), p(0) * p(1), p(1) * p(1);
  }
  const Eigen::FullPivLU<Mat> lu(moments);
  const Mat kernel = lu.kernel();
  REQUIRE(kernel.cols() == k - 6);
  const Vec v = kernel.col(0);
  const Vec f0 = Vec::Constant(k, 1.0 / k);
  const Vec f1 = f0 + (0.5 / k / v.cwiseAbs().maxCoeff()) * v;
  CHECK((f1 - f0).norm() > 1e-3);
  const ObservationSet q = ObservationSet::from_points(random_points(rng, r2, k));
  const CovarianceSet c0 = forward_covariance_set(Pmf(support, f0), q, Amplitude::unit());
  const CovarianceSet c1 = forward_covariance_set(Pmf(support, f1), q, Amplitude::unit());
  for (int j = 0; j < q.size(); ++j) {
    CHECK((c0.tensors[j].matrix() - c1.tensors[j].matrix()).norm() <= 1e-12 * c0.tensors[j].matrix().norm());
  }
  for (auto kind : kSmooth) CHECK(std::abs(objective(f1, c0, support, kind)) <= 1e-10);
}

TEST_CASE("recovery errors") {
  const Setup s = make_setup(Manifold::sphere2(), 4, 81);
  CovarianceSet bad = s.c;
  bad.tensors[0] = SpdMatrix(Mat::Zero(2, 2));
  CHECK(kind_of([&] { RecoveryProblem(bad, s.sp.support, InvariantKind::Lik); }) == ErrorKind::NotSpd);
  const RecoveryProblem p(s.c, s.sp.support, InvariantKind::Lik);
  CHECK(kind_of([&] { p.value(Vec::Constant(3, 1.0 / 3)); }) == ErrorKind::Validation);
  CHECK(kind_of([&] { RecoveryProblem(s.c, s.sp.support, InvariantKind::TrLn2).gradient(s.sp.truth); }) ==
        ErrorKind::Validation);
  std::vector<Point> flat(4, pt(Manifold::euclidean(2), {0, 0}));
  CHECK(kind_of([&] { RecoveryProblem(s.c, flat, InvariantKind::TrDifSq); }) == ErrorKind::Validation);
}

TEST_CASE("perturb tensor") {
  Rng rng(91);
  const SpdMatrix id = SpdMatrix::identity(3);
  for (double eps : {0.0, 1e-3, 0.1, 1.0}) {
    const SpdMatrix c = perturb_tensor(rng, id, eps);
    // E E' = exp(2S) with ||S|| = eps.
    CHECK(whiten_log(c, id).cwiseAbs().maxCoeff() == doctest::Approx(2 * eps).epsilon(1e-10));
  }
  const SpdMatrix x = random_spd(rng, 2, 10.0);
  CHECK((perturb_tensor(rng, x, 0.0).matrix() - x.matrix()).norm() == 0.0);
}

TEST_CASE("consistency experiment") {
  const Setup s = make_setup(Manifold::sphere2(), 6, 101);
  ConsistencyOptions opt;
  opt.noise = {0.0, 0.1, 0.05, 0.025, 0.0125};
  opt.seeds = 5;
  opt.solver.kind = InvariantKind::Lik;
  const ConsistencyReport lik = consistency_experiment(s.sp.truth, s.sp.support, s.obs, opt);
  CHECK(lik.median_error[0] <= 1e-8);
  for (std::size_t m = 2; m < lik.median_error.size(); ++m) CHECK(lik.median_error[m] < lik.median_error[m - 1]);

  opt.solver.kind = InvariantKind::TrDifSq;
  const ConsistencyReport tr = consistency_experiment(s.sp.truth, s.sp.support, s.obs, opt);
  CHECK(tr.bound_holds);
  CHECK(tr.h_deviation[0] == 0.0);
  for (std::size_t m = 1; m < tr.noise.size(); ++m) CHECK(tr.h_deviation[m] <= tr.h_bound[m]);
}

TEST_CASE("cap partition") {
  for (double radius : {0.5, 1.0, 2.0}) {
    for (int m : {1, 2, 4}) {
      const CapPartition part = partition_cap(radius, 1.0 / m);
      double area = 0.0;
      for (const auto& c : part.cells) {
        CHECK(c.diameter <= 1.0 / m + 1e-12);
        CHECK(c.area == doctest::Approx((c.phi1 - c.phi0) * (std::cos(c.theta0) - std::cos(c.theta1))));
        CHECK(c.contains(c.center()));
        area += c.area;
      }
      CHECK(area == doctest::Approx(2 * pi * (1 - std::cos(radius))).epsilon(1e-12));
      // Independent diameter check with a finer boundary sampling.
      for (const auto& c : part.cells) {
        CHECK(cell_diameter(c.theta0, c.theta1, c.phi0, c.phi1, 64) <= 1.0 / m + 1e-6);
      }
      Rng rng(static_cast<std::uint64_t>(radius * 100) + m);
      const Point pole = pt(Manifold::sphere2(), {0, 0, 1});
      for (int t = 0; t < 500; ++t) {
        const Point p = uniform_cap(rng, pole, radius);
        const int idx = part.locate(p);
        REQUIRE(idx >= 0);
        int hits = 0;
        for (const auto& c : part.cells) hits += c.contains(p);
        CHECK(hits >= 1);
        CHECK(part.cells[idx].contains(p));
      }
      CHECK(part.locate(pt(Manifold::sphere2(), {0, 0, -1})) == -1);
    }
  }
}

TEST_CASE("point mass is recovered exactly from cell centers") {
  for (int m : {1, 2}) {
    const CapPartition part = partition_cap(1.0, 1.0 / m);
    const std::size_t cell = part.cells.size() / 2;
    const ContinuousTarget target = ContinuousTarget::point_mass(part.cells[cell].center());
    ContinuousOptions opt;
    opt.resolution = m;
    opt.placement = Placement::CellCenter;
    const ContinuousReport rep = continuous_recovery(target, opt);
    CHECK(rep.recovered(cell) >= 0.99999);
    CHECK(rep.total_variation <= 1e-5);
    CHECK(rep.true_masses(cell) == 1.0);
  }
}

TEST_CASE("concentric mixture cell masses") {
  const ContinuousTarget t = ContinuousTarget::concentric_mixture(1.0, 0.5);
  const CapPartition part = partition_cap(1.0, 0.5);
  double total = 0.0;
  for (const auto& c : part.cells) total += t.cell_mass(part, c);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  // Monte Carlo oracle for the masses.
  Rng rng(3);
  std::vector<double> counts(part.cells.size(), 0.0);
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) counts[part.locate(t.sample(rng))] += 1.0;
  for (std::size_t i = 0; i < part.cells.size(); ++i) {
    const double mass = t.cell_mass(part, part.cells[i]);
    CHECK(std::abs(counts[i] / draws - mass) <= 5 * std::sqrt(mass * (1 - mass) / draws) + 1e-12);
  }
  CHECK(kind_of([] { ContinuousTarget::concentric_mixture(0.5, 1.0); }) == ErrorKind::Validation);
}

TEST_CASE("log map Lipschitz constant") {
  const LipschitzReport small = lipschitz_probe(0.01, 20000, 1);
  CHECK(small.empirical_beta == doctest::Approx(1.0).epsilon(1e-3));
  const LipschitzReport big = lipschitz_probe(pi / 2, 20000, 2);
  CHECK(big.bound == doctest::Approx(pi / 2));
  CHECK(big.empirical_beta <= big.bound);
  CHECK(big.empirical_beta > 1.0);
}
