#include "covfield/covariance.hpp"
#include "covfield/experiments.hpp"
#include "covfield/sampling.hpp"
#include "support.hpp"

#include <cmath>
#include <numbers>

using namespace covfield;
using covfield::testing::kind_of;
using covfield::testing::pt;
using covfield::testing::vec;

namespace {

constexpr double pi = std::numbers::pi;

Pmf random_pmf(Rng& rng, const Manifold& m, int k, double spread = -1.0) {
  return Pmf(random_points(rng, m, k, spread), random_simplex(rng, k));
}

// 1/2 integral_0^pi (t - a)^2 sin t dt by composite Simpson.
double simpson_pair_expectation(double a) {
  const int n = 20000;
  const double h = pi / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * (t - a) * (t - a) * std::sin(t);
  }
  return 0.5 * s * h / 3.0;
}

}  // namespace

TEST_CASE("amplitude functions") {
  const Amplitude u = Amplitude::parse("unit");
  CHECK(u == Amplitude::unit());
  CHECK(u(0.7) == 1.0);
  CHECK(u.weighted_square(0.5) == 0.25);
  const Amplitude a = Amplitude::parse("a=0.5");
  CHECK(a.a() == 0.5);
  CHECK(a(2.0) == doctest::Approx(0.5625));
  CHECK(a.weighted_square(2.0) == doctest::Approx(2.25));
  CHECK(a.weighted_square(0.0) == 0.0);
  CHECK(a.outer_weight(0.0) == 0.0);
  CHECK(Amplitude::parse("optimal:R=2").a() == 1.0);
  CHECK(Amplitude::parse(Amplitude::one_minus_over_t(0.25).tag()) == Amplitude::one_minus_over_t(0.25));
  CHECK(kind_of([] { Amplitude::parse("a=-1"); }) == ErrorKind::Validation);
  CHECK(kind_of([] { Amplitude::parse("a=0"); }) == ErrorKind::Validation);
  CHECK(kind_of([] { Amplitude::parse("gauss"); }) == ErrorKind::Validation);
  CHECK(kind_of([] { Amplitude::parse("optimal:R=x"); }) == ErrorKind::Validation);
}

TEST_CASE("optimal amplitude is the vertex of the trace integral") {
  CHECK(optimal_amplitude(pi).a() == doctest::Approx(pi / 2).epsilon(1e-15));
  CHECK(optimal_amplitude(2.0).a() == 1.0);
  for (double r : {0.5, 1.0, 2.0, pi}) {
    double best = 0.0, best_value = 1e300;
    for (int i = 1; i <= 1000; ++i) {
      const double a = r * i / 1000.0;
      const double g = amplitude_trace_integral(r, a);
      if (g < best_value) {
        best_value = g;
        best = a;
      }
    }
    CHECK(std::abs(best - r / 2) <= r / 1000.0);
    CHECK(amplitude_trace_integral(r, r / 2) == doctest::Approx(r * r * r / 12.0));
  }
}

TEST_CASE("pmf validation") {
  const auto s2 = Manifold::sphere2();
  const std::vector<Point> two{pt(s2, {1, 0, 0}), pt(s2, {0, 1, 0})};
  CHECK(kind_of([&] { Pmf(two, vec({0.7, 0.2})); }) == ErrorKind::Validation);
  CHECK(kind_of([&] { Pmf(two, vec({1.1, -0.1})); }) == ErrorKind::Validation);
  CHECK(kind_of([&] { Pmf(two, vec({1.0})); }) == ErrorKind::Validation);
  CHECK(kind_of([&] { Pmf({}, Vec()); }) == ErrorKind::Validation);
  CHECK(kind_of([&] { Pmf({pt(s2, {1, 0, 0}), pt(Manifold::euclidean(3), {0, 0, 0})}, vec({0.5, 0.5})); }) ==
        ErrorKind::Validation);
  CHECK(Pmf::uniform(two).weights()(1) == 0.5);
}

TEST_CASE("z tensor") {
  const auto r2 = Manifold::euclidean(2);
  const Point q = pt(r2, {0, 0});
  const Chart c = Chart::orthonormal(q);
  CHECK(z_tensor(q, q, c).matrix().norm() == 0.0);
  const Mat z = z_tensor(q, pt(r2, {1, 0}), c).matrix();
  CHECK((z - (Mat(2, 2) << 1, 0, 0, 0).finished()).norm() == 0.0);
  Rng rng(1);
  for (const auto& m : covfield::testing::all_manifolds()) {
    for (int t = 0; t < 100; ++t) {
      const Point a = random_point(rng, m, 1.0), b = random_point(rng, m, 1.0);
      const Chart x = Chart::orthonormal(a);
      const ChartJacobian jac(random_nonsingular(rng, m.dimension(), 100.0));
      const SpdMatrix zx = z_tensor(a, b, x);
      CHECK(zx.trace() == doctest::Approx(distance(a, b) * distance(a, b)).epsilon(1e-12));
      const Mat law = transform_contravariant(zx, jac).matrix();
      CHECK((z_tensor(a, b, reframe(x, jac)).matrix() - law).norm() <= 1e-10 * std::max(1.0, law.norm()));
    }
  }
}

TEST_CASE("covariance at q: hand examples") {
  const auto r2 = Manifold::euclidean(2);
  const Point q = pt(r2, {0, 0});
  const Pmf f({pt(r2, {0, 0}), pt(r2, {1, 0})}, vec({0.5, 0.5}));
  const CovarianceTensor s = covariance_at(q, f, Amplitude::unit());
  CHECK((s.sigma.matrix() - (Mat(2, 2) << 0.5, 0, 0, 0).finished()).norm() < 1e-15);
  CHECK(s.degenerate);
  // Point mass: Sigma = Z r(d).
  const auto s2 = Manifold::sphere2();
  const Point a = pt(s2, {0, 0, 1}), b = pt(s2, {1, 0, 0});
  const Amplitude r = Amplitude::one_minus_over_t(0.3);
  const Chart c = Chart::orthonormal(a);
  const Mat expected = z_tensor(a, b, c).matrix() * r(pi / 2);
  CHECK((covariance_at(a, Pmf::point_mass(b), r, c).sigma.matrix() - expected).norm() < 1e-14);
}

TEST_CASE("Euclidean moment decomposition") {
  Rng rng(2);
  for (int n : {2, 3}) {
    const auto m = Manifold::euclidean(n);
    for (int t = 0; t < 30; ++t) {
      const Pmf f = random_pmf(rng, m, 6);
      Vec mu = Vec::Zero(n);
      for (int i = 0; i < f.size(); ++i) mu += f.weights()(i) * f.support()[i].coords();
      Mat central = Mat::Zero(n, n);
      for (int i = 0; i < f.size(); ++i) {
        const Vec d = f.support()[i].coords() - mu;
        central += f.weights()(i) * d * d.transpose();
      }
      const Point q = random_point(rng, m, 2.0);
      const Vec dq = q.coords() - mu;
      const Mat oracle = central + dq * dq.transpose();
      CHECK((covariance_at(q, f, Amplitude::unit()).sigma.matrix() - oracle).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(trace_field(q, f, Amplitude::unit()) == doctest::Approx(oracle.trace()).epsilon(1e-12));
    }
  }
}

TEST_CASE("covariance is PSD and its trace is the trace field") {
  Rng rng(3);
  for (const auto& m : covfield::testing::all_manifolds()) {
    for (const Amplitude& r : {Amplitude::unit(), Amplitude::one_minus_over_t(0.4)}) {
      for (int t = 0; t < 40; ++t) {
        const Pmf f = random_pmf(rng, m, 5, 1.2);
        const Point q = random_point(rng, m, 1.2);
        const CovarianceTensor s = covariance_at(q, f, r);
        CHECK(s.sigma.min_eigenvalue() >= -1e-12);
        CHECK(std::abs(s.sigma.trace() - trace_field(q, f, r)) <= 1e-12 * std::max(1.0, s.sigma.trace()));
      }
    }
  }
}

TEST_CASE("congruence and chart-invariant spectrum") {
  Rng rng(4);
  for (const auto& m : covfield::testing::all_manifolds()) {
    for (int t = 0; t < 30; ++t) {
      const Pmf f = random_pmf(rng, m, 4, 1.0);
      const Point q = random_point(rng, m, 1.0);
      const Chart x = Chart::orthonormal(q);
      const ChartJacobian a(random_nonsingular(rng, m.dimension(), 50.0));
      const Chart y = reframe(x, a);
      const CovarianceTensor sx = covariance_at(q, f, Amplitude::unit(), x);
      const CovarianceTensor sy = covariance_at(q, f, Amplitude::unit(), y);
      const Mat law = transform_contravariant(sx.sigma, a).matrix();
      CHECK((sy.sigma.matrix() - law).norm() <= 1e-10 * std::max(1.0, law.norm()));
      const Vec ex = operator_eigenvalues(x, sx), ey = operator_eigenvalues(y, sy);
      CHECK((ex - ey).norm() <= 1e-10 * std::max(1.0, ex.norm()));
      // Scalar form <w, (G Sigma) v> does not depend on the chart.
      const TangentVector v = random_tangent(rng, q, 1.0), w = random_tangent(rng, q, 1.0);
      const double fx = operator_quadratic_form(x, sx, v, w);
      const double fy = operator_quadratic_form(y, sy, v, w);
      CHECK(std::abs(fx - fy) <= 1e-10 * std::max(1.0, std::abs(fx)));
      CHECK(operator_quadratic_form(x, sx, v, w) == doctest::Approx(operator_quadratic_form(x, sx, w, v)));
    }
  }
}

TEST_CASE("quadratic form basics") {
  const auto s2 = Manifold::sphere2();
  const Point q = pt(s2, {0, 0, 1});
  const Chart c = Chart::orthonormal(q);
  const CovarianceTensor id{q, SpdMatrix::identity(2), Amplitude::unit(), false};
  const TangentVector zero = TangentVector::zero(q);
  CHECK(operator_quadratic_form(c, id, zero, zero) == 0.0);
  const TangentVector v(q, vec({0.3, -1.2, 0})), w(q, vec({2.0, 0.5, 0}));
  CHECK(operator_quadratic_form(c, id, v, w) == doctest::Approx(inner(q, v.components(), w.components())));
  CHECK(operator_quadratic_form(c, id, v, v) > 0.0);
}

TEST_CASE("cut locus is reported with support indices") {
  const auto s2 = Manifold::sphere2();
  const Pmf f({pt(s2, {1, 0, 0}), pt(s2, {0, 0, -1}), pt(s2, {0, 1, 0})}, vec({0.2, 0.3, 0.5}));
  const Point q = pt(s2, {0, 0, 1});
  try {
    covariance_at(q, f, Amplitude::unit());
    FAIL("expected CutLocus");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CutLocus);
    CHECK(std::string(e.what()).find('1') != std::string::npos);
  }
  CHECK(kind_of([&] { trace_field(q, f, Amplitude::unit()); }) == ErrorKind::CutLocus);
}

TEST_CASE("degenerate covariance is flagged") {
  const auto s2 = Manifold::sphere2();
  const Point q = pt(s2, {0, 0, 1});
  const Point a = exp_map(q, TangentVector(q, vec({0.5, 0, 0})));
  const Point b = exp_map(q, TangentVector(q, vec({-0.8, 0, 0})));
  CHECK(covariance_at(q, Pmf({a, b}, vec({0.5, 0.5})), Amplitude::unit()).degenerate);
  const Point c = exp_map(q, TangentVector(q, vec({0, 0.3, 0})));
  CHECK_FALSE(covariance_at(q, Pmf({a, b, c}, vec({0.3, 0.3, 0.4})), Amplitude::unit()).degenerate);
}

TEST_CASE("uniform sphere pair expectation") {
  // Frozen from the quadrature oracle.
  CHECK(simpson_pair_expectation(0.0) == doctest::Approx(2.934802200544679).epsilon(1e-12));
  CHECK(simpson_pair_expectation(pi / 2) == doctest::Approx(0.4674011002723395).epsilon(1e-12));
  CHECK(uniform_sphere_pair_expectation(Amplitude::unit()) == doctest::Approx(pi * pi / 2 - 2).epsilon(1e-15));
  CHECK(uniform_sphere_pair_expectation(optimal_amplitude(pi)) == doctest::Approx(pi * pi / 4 - 2).epsilon(1e-15));
  for (double a : {0.3, 1.0, 2.5}) {
    CHECK(uniform_sphere_pair_expectation(Amplitude::one_minus_over_t(a)) ==
          doctest::Approx(simpson_pair_expectation(a)).epsilon(1e-12));
  }
}

TEST_CASE("intrinsic mean") {
  {
    Rng rng(5);
    const auto r3 = Manifold::euclidean(3);
    const Pmf f = random_pmf(rng, r3, 7);
    Vec mu = Vec::Zero(3);
    for (int i = 0; i < f.size(); ++i) mu += f.weights()(i) * f.support()[i].coords();
    const MeanResult res = intrinsic_mean(f, pt(r3, {5, 5, 5}));
    CHECK((res.mean.coords() - mu).norm() < 1e-12);
    CHECK(res.iterations <= 2);
  }
  {
    const auto s2 = Manifold::sphere2();
    const Pmf f({pt(s2, {1, 0, 0}), pt(s2, {0, 1, 0})}, vec({0.5, 0.5}));
    const MeanResult res = intrinsic_mean(f, pt(s2, {0.6, 0.0, 0.8}));
    CHECK((res.mean.coords() - vec({1 / std::sqrt(2.0), 1 / std::sqrt(2.0), 0})).norm() < 1e-9);
  }
  {
    // Dense grid oracle on a cap.
    const auto s2 = Manifold::sphere2();
    Rng rng(6);
    const Pmf f = random_pmf(rng, s2, 6, 0.8);
    const MeanResult res = intrinsic_mean(f, pt(s2, {0, 0, 1}));
    CHECK(res.gradient_norm <= 1e-10);
    const std::vector<Point> grid = make_grid(s2, 200, 1.0);
    double best = 1e300;
    Point arg = grid.front();
    for (const auto& g : grid) {
      const double v = trace_field(g, f, Amplitude::unit());
      if (v < best) {
        best = v;
        arg = g;
      }
    }
    // Grid spacing is at most 2 pi / 200 in angle.
    CHECK(distance(arg, res.mean) <= 2 * pi / 200);
    CHECK(trace_field(res.mean, f, Amplitude::unit()) <= best + 1e-12);
  }
  {
    const auto h2 = Manifold::hyperbolic2();
    Rng rng(7);
    const Pmf f = random_pmf(rng, h2, 5);
    const MeanResult res = intrinsic_mean(f, random_point(rng, h2));
    // Stationarity: the weighted log vectors cancel.
    Vec g = Vec::Zero(3);
    for (int i = 0; i < f.size(); ++i) g += f.weights()(i) * log_map(res.mean, f.support()[i]).components();
    CHECK(std::sqrt(std::max(0.0, inner(res.mean, g, g))) <= 1e-9);
  }
  {
    MeanOptions opt;
    opt.max_iter = 1;
    opt.tol = 1e-16;
    const auto s2 = Manifold::sphere2();
    Rng rng(8);
    const Pmf f = random_pmf(rng, s2, 5, 1.0);
    CHECK(kind_of([&] { intrinsic_mean(f, pt(s2, {1, 0, 0}), opt); }) == ErrorKind::NoConvergence);
  }
}

TEST_CASE("continuity probe") {
  const auto s2 = Manifold::sphere2();
  Rng rng(9);
  const Pmf f = random_pmf(rng, s2, 5, 1.0);
  const Point q0 = random_point(rng, s2, 0.5);
  {
    const ContinuityReport r = continuity_probe(f, q0, Amplitude::unit(), std::vector<Point>(5, q0));
    CHECK(r.tail_trace_deviation == 0.0);
    // The transported frame at q0 matches the reference up to rounding.
    CHECK(r.tail_form_deviation <= 1e-15);
    CHECK(r.tail_eigenvalue_deviation <= 1e-15);
  }
  {
    const TangentVector dir = random_tangent(rng, q0, 1.0);
    const Vec unit = dir.components() / norm(dir);
    std::vector<Point> traj;
    for (int k = 1; k <= 25; ++k) traj.push_back(exp_map(q0, TangentVector(q0, 0.5 * std::ldexp(1.0, -k) * unit)));
    const ContinuityReport r = continuity_probe(f, q0, Amplitude::unit(), traj);
    CHECK(r.eigenvalue_deviation.back() < 1e-6);
    CHECK(r.trace_deviation.back() < 1e-6);
    CHECK(r.form_deviation.back() < 1e-6);
    // Halving steps shrink the eigenvalue gaps monotonically.
    for (std::size_t i = 1; i < r.eigenvalue_deviation.size(); ++i) {
      CHECK(r.eigenvalue_deviation[i] <= r.eigenvalue_deviation[i - 1] + 1e-15);
    }
  }
  {
    // In R^n rho(q) = rho(mu) + |q - mu|^2, so the deviation is O(d).
    const auto r2 = Manifold::euclidean(2);
    const Pmf g = random_pmf(rng, r2, 5);
    const Point p0 = pt(r2, {0.3, -0.2});
    Vec mu = Vec::Zero(2);
    for (int i = 0; i < g.size(); ++i) mu += g.weights()(i) * g.support()[i].coords();
    std::vector<Point> traj;
    for (int k = 1; k <= 20; ++k) traj.push_back(pt(r2, {0.3 + std::ldexp(1.0, -k), -0.2}));
    const ContinuityReport r = continuity_probe(g, p0, Amplitude::unit(), traj);
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const double closed = std::abs((traj[i].coords() - mu).squaredNorm() - (p0.coords() - mu).squaredNorm());
      CHECK(r.trace_deviation[i] == doctest::Approx(closed).epsilon(1e-9));
    }
    CHECK(r.trace_deviation.back() / r.distances.back() == doctest::Approx(2 * std::abs(0.3 - mu(0))).epsilon(1e-4));
  }
}
