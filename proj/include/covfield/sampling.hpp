#pragma once

#include "covfield/chart.hpp"
#include "covfield/manifold.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace covfield {

/// Seeded generator with a fully specified output stream: mt19937_64 words,
/// uniforms as (word >> 11) * 2^-53, normals by Box-Muller. The same seed
/// gives the same draws on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Independent generator for sub-stream `stream` (splitmix64 of seed and stream).
  Rng split(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Uniform on S^2 via normalized Gaussian triples.
Point uniform_sphere(Rng& rng);
/// Area-uniform on the geodesic cap of `radius` around `center` (S^2).
Point uniform_cap(Rng& rng, const Point& center, double radius);
/// Area-uniform on the geodesic disc of `radius` around `center` (H^2):
/// rho = arcosh(1 + U (cosh R - 1)), uniform angle.
Point uniform_hyperbolic_ball(Rng& rng, const Point& center, double radius);
/// Uniform on the box [-half_width, half_width]^n (R^n).
Point uniform_box(Rng& rng, const Manifold& m, double half_width);

/// Default "random point" for each model: the whole sphere, the H^2 disc of
/// radius 2 about (0,0,1), the box [-1,1]^n. `spread` overrides the radius
/// (sphere cap about the north pole when spread < pi) or half-width.
Point random_point(Rng& rng, const Manifold& m, double spread = -1.0);
std::vector<Point> random_points(Rng& rng, const Manifold& m, int count, double spread = -1.0);

/// Flat Dirichlet draw on the (k-1)-simplex.
Vec random_simplex(Rng& rng, int k);
/// Tangent vector at q with uniform direction and norm uniform in [0, max_norm].
TangentVector random_tangent(Rng& rng, const Point& q, double max_norm);
/// Q1 diag(s) Q2 with log-uniform singular values in [1, max_condition].
Mat random_nonsingular(Rng& rng, int n, double max_condition);
/// Q diag(l) Q' with log-uniform eigenvalues in [1/sqrt(c), sqrt(c)].
SpdMatrix random_spd(Rng& rng, int n, double condition = 10.0);
/// Random orthogonal matrix (QR of a Gaussian matrix, sign-fixed).
Mat random_orthogonal(Rng& rng, int n);

/// i.i.d. draws from a target distribution, with the seed that produced them.
struct EmpiricalSample {
  std::vector<Point> points;
  std::uint64_t seed = 0;
};

EmpiricalSample sample_uniform_sphere(int count, std::uint64_t seed);

}  // namespace covfield
