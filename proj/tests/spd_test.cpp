#include "covfield/sampling.hpp"
#include "covfield/spd.hpp"
#include "support.hpp"

#include <cmath>
#include <vector>

using namespace covfield;
using covfield::testing::kind_of;

namespace {

SpdMatrix diag(std::initializer_list<double> d) {
  return SpdMatrix(covfield::testing::vec(d).asDiagonal().toDenseMatrix());
}

SpdMatrix scaled_identity(int n, double s) { return SpdMatrix(s * Mat::Identity(n, n)); }

SpdMatrix congruent(const Mat& a, const SpdMatrix& x) {
  return SpdMatrix(a * x.matrix() * a.transpose(), 1e-6);
}

const std::vector<InvariantKind> kAll{InvariantKind::TrDif, InvariantKind::TrDifSq, InvariantKind::TrLn2,
                                     InvariantKind::Lik,   InvariantKind::LnTr,    InvariantKind::LnPr,
                                     InvariantKind::TrSq};

}  // namespace

TEST_CASE("construction symmetrizes and rejects asymmetric input") {
  Mat m(2, 2);
  m << 1.0, 0.5 + 1e-10, 0.5, 2.0;
  const SpdMatrix s(m);
  CHECK(s(0, 1) == s(1, 0));
  m(0, 1) = 0.6;
  CHECK(kind_of([&] { SpdMatrix{m}; }) == ErrorKind::Validation);
  CHECK(kind_of([] { SpdMatrix(Mat::Zero(2, 3)); }) == ErrorKind::Validation);
}

TEST_CASE("invariant values on diagonal inputs") {
  const SpdMatrix i2 = SpdMatrix::identity(2);
  CHECK(invariant(InvariantKind::Lik, scaled_identity(2, 2.0), i2) ==
        doctest::Approx(2.0 - 2.0 * std::log(2.0)).epsilon(1e-14));
  CHECK(invariant(InvariantKind::TrLn2, scaled_identity(2, std::exp(2.0)), i2) ==
        doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-14));
  CHECK(invariant(InvariantKind::TrSq, scaled_identity(2, 2.0), i2) == doctest::Approx(4.5).epsilon(1e-14));
  CHECK(invariant(InvariantKind::TrDif, diag({3.0, 1.0}), i2, i2) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(invariant(InvariantKind::TrDifSq, diag({3.0, 1.0}), i2, i2) == doctest::Approx(4.0).epsilon(1e-15));
  // The minimum of lnpr is ln n^2, not 0.
  CHECK(invariant(InvariantKind::LnPr, i2, i2) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(invariant(InvariantKind::LnTr, scaled_identity(2, 2.0), i2) == doctest::Approx(std::log(4.5)).epsilon(1e-14));
  // Reference tensor Z rescales the trace difference.
  CHECK(invariant(InvariantKind::TrDif, diag({3.0, 1.0}), i2, scaled_identity(2, 2.0)) ==
        doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("invariant errors") {
  const SpdMatrix i2 = SpdMatrix::identity(2);
  CHECK(kind_of([&] { invariant(InvariantKind::Lik, diag({1.0, 0.0}), i2); }) == ErrorKind::NotSpd);
  CHECK(kind_of([&] { invariant(InvariantKind::TrSq, i2, diag({1.0, -1.0})); }) == ErrorKind::NotSpd);
  CHECK(kind_of([&] { invariant(InvariantKind::LnTr, i2, i2); }) == ErrorKind::DomainError);
  CHECK(kind_of([&] { invariant(InvariantKind::Lik, i2, SpdMatrix::identity(3)); }) == ErrorKind::Validation);
  CHECK(kind_of([] { parse_invariant("frobenius"); }) == ErrorKind::Validation);
  for (auto k : kAll) CHECK(parse_invariant(to_string(k)) == k);
}

TEST_CASE("whiten_log") {
  const SpdMatrix i2 = SpdMatrix::identity(2);
  CHECK(whiten_log(i2, i2).cwiseAbs().maxCoeff() == 0.0);
  const Vec l = whiten_log(diag({std::exp(1.0), std::exp(3.0)}), i2);
  CHECK(l(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(l(1) == doctest::Approx(3.0).epsilon(1e-14));
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const SpdMatrix x = random_spd(rng, 3, 100.0), y = random_spd(rng, 3, 100.0);
    const Vec logs = whiten_log(x, y);
    const Mat xy = x.matrix() * y.matrix().inverse();
    CHECK(logs.sum() == doctest::Approx(std::log(xy.determinant())).epsilon(1e-10));
    // Eigenvalues of the non-symmetric product, by a general solver.
    Vec ev = Eigen::EigenSolver<Mat>(xy).eigenvalues().real();
    std::sort(ev.data(), ev.data() + ev.size());
    CHECK((logs.array().exp().matrix() - ev).norm() <= 1e-10 * ev.norm());
  }
}

TEST_CASE("similarity invariance for every kind") {
  Rng rng(2);
  for (auto kind : kAll) {
    CAPTURE(to_string(kind));
    for (int t = 0; t < 50; ++t) {
      const int n = 2 + t % 2;
      const SpdMatrix x = random_spd(rng, n, 20.0), y = random_spd(rng, n, 20.0), z = random_spd(rng, n, 5.0);
      const Mat a = random_nonsingular(rng, n, 1e4);
      const double before = invariant(kind, x, y, z);
      const double after = invariant(kind, congruent(a, x), congruent(a, y), congruent(a, z));
      CHECK(std::abs(after - before) <= 1e-8 * std::max(1.0, std::abs(before)));
    }
  }
}

TEST_CASE("nonnegativity and unique root") {
  Rng rng(3);
  for (auto kind : {InvariantKind::TrLn2, InvariantKind::Lik, InvariantKind::TrSq}) {
    CAPTURE(to_string(kind));
    CHECK(has_unique_root(kind));
    for (int t = 0; t < 100; ++t) {
      const SpdMatrix x = random_spd(rng, 3, 50.0), y = random_spd(rng, 3, 50.0);
      const double v = invariant(kind, x, y);
      CHECK(v >= 0.0);
      CHECK(v > 1e-10);
      CHECK(std::abs(invariant(kind, x, x)) <= 1e-10);
    }
  }
  CHECK_FALSE(has_unique_root(InvariantKind::TrDif));
  CHECK_FALSE(has_unique_root(InvariantKind::LnPr));
}

TEST_CASE("trln2 triangle inequality") {
  Rng rng(4);
  for (int t = 0; t < 300; ++t) {
    const SpdMatrix x = random_spd(rng, 3, 30.0), y = random_spd(rng, 3, 30.0), z = random_spd(rng, 3, 30.0);
    const double xz = invariant(InvariantKind::TrLn2, x, z);
    const double xy = invariant(InvariantKind::TrLn2, x, y);
    const double yz = invariant(InvariantKind::TrLn2, y, z);
    CHECK(xz <= xy + yz + 1e-10);
  }
}

TEST_CASE("lik is not symmetric") {
  const SpdMatrix x = diag({2.0, 1.0});
  const SpdMatrix y = SpdMatrix::identity(2);
  const double xy = invariant(InvariantKind::Lik, x, y);
  const double yx = invariant(InvariantKind::Lik, y, x);
  // tr(XY^-1) - ln det(XY^-1) - 2 by hand.
  CHECK(xy == doctest::Approx(1.0 - std::log(2.0)).epsilon(1e-14));
  CHECK(yx == doctest::Approx(-0.5 + std::log(2.0)).epsilon(1e-14));
  CHECK(std::abs(xy - yx) > 0.1);
}

TEST_CASE("lnpr attains ln n^2 exactly at proportional pairs") {
  Rng rng(5);
  for (int n = 2; n <= 4; ++n) {
    const SpdMatrix y = random_spd(rng, n, 10.0);
    const SpdMatrix x(3.7 * y.matrix());
    CHECK(invariant(InvariantKind::LnPr, x, y) == doctest::Approx(std::log(double(n * n))).epsilon(1e-12));
    const SpdMatrix w = random_spd(rng, n, 10.0);
    CHECK(invariant(InvariantKind::LnPr, w, y) > std::log(double(n * n)));
  }
}

TEST_CASE("numerical rank") {
  CHECK(numerical_rank(Mat::Identity(7, 7)) == 7);
  const Vec u = covfield::testing::vec({1, 2, 3}), v = covfield::testing::vec({-1, 0.5, 4});
  CHECK(numerical_rank(u * v.transpose()) == 1);
  CHECK(numerical_rank(Mat::Zero(3, 3)) == 0);
  const Vec s = singular_values(Eigen::Vector3d(3, 1, 2).asDiagonal().toDenseMatrix());
  CHECK((s - Eigen::Vector3d(3, 2, 1)).norm() < 1e-15);
  Mat near(2, 2);
  near << 1.0, 0.0, 0.0, 1e-10;
  CHECK(numerical_rank(near, 1e-9) == 1);
  CHECK(numerical_rank(near, 1e-11) == 2);
}

TEST_CASE("strict SPD checks") {
  CHECK(SpdMatrix::identity(3).is_strictly_positive());
  CHECK_FALSE(diag({1.0, 1e-13}).is_strictly_positive());
  CHECK(kind_of([] { require_strict_spd(diag({1.0, 0.0}), "C"); }) == ErrorKind::NotSpd);
  CHECK(diag({4.0, 1.0, 9.0}).min_eigenvalue() == doctest::Approx(1.0));
  const Mat w = inverse_sqrt(diag({4.0, 9.0}));
  CHECK((w - Eigen::Vector2d(0.5, 1.0 / 3.0).asDiagonal().toDenseMatrix()).norm() < 1e-15);
}
