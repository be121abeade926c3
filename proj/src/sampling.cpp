#include "covfield/sampling.hpp"

#include "covfield/error.hpp"

#include <cmath>
#include <numbers>

namespace covfield {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

Point uniform_sphere(Rng& rng) {
  while (true) {
    Vec g(3);
    g << rng.normal(), rng.normal(), rng.normal();
    const double n = g.norm();
    if (n > 1e-12) return Point::project(Manifold::sphere2(), g / n);
  }
}

Point uniform_cap(Rng& rng, const Point& center, double radius) {
  if (center.manifold().kind() != ManifoldKind::Sphere2) {
    throw Error(ErrorKind::Validation, "uniform_cap needs a sphere point");
  }
  radius = std::min(radius, std::numbers::pi);
  const double z = rng.uniform(std::cos(radius), 1.0);
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double theta = std::acos(std::clamp(z, -1.0, 1.0));
  const Chart chart = Chart::orthonormal(center);
  const Vec dir = std::cos(phi) * chart.frame().col(0) + std::sin(phi) * chart.frame().col(1);
  return Point::project(center.manifold(),
                        std::cos(theta) * center.coords() + std::sin(theta) * dir);
}

Point uniform_hyperbolic_ball(Rng& rng, const Point& center, double radius) {
  if (center.manifold().kind() != ManifoldKind::Hyperbolic2) {
    throw Error(ErrorKind::Validation, "uniform_hyperbolic_ball needs a hyperboloid point");
  }
  const double rho = std::acosh(1.0 + rng.uniform() * (std::cosh(radius) - 1.0));
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const Chart chart = Chart::orthonormal(center);
  const Vec dir = std::cos(phi) * chart.frame().col(0) + std::sin(phi) * chart.frame().col(1);
  return exp_map(center, TangentVector(center, rho * dir));
}

Point uniform_box(Rng& rng, const Manifold& m, double half_width) {
  Vec x(m.ambient_dimension());
  for (int i = 0; i < x.size(); ++i) x(i) = rng.uniform(-half_width, half_width);
  return Point(m, x);
}

Point random_point(Rng& rng, const Manifold& m, double spread) {
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      return uniform_box(rng, m, spread > 0 ? spread : 1.0);
    case ManifoldKind::Sphere2:
      if (spread > 0 && spread < std::numbers::pi) {
        return uniform_cap(rng, Point(m, Eigen::Vector3d::UnitZ()), spread);
      }
      return uniform_sphere(rng);
    case ManifoldKind::Hyperbolic2:
      return uniform_hyperbolic_ball(rng, Point(m, Eigen::Vector3d::UnitZ()),
                                     spread > 0 ? spread : 2.0);
  }
  throw Error(ErrorKind::Validation, "unsupported manifold");
}

std::vector<Point> random_points(Rng& rng, const Manifold& m, int count, double spread) {
  std::vector<Point> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(random_point(rng, m, spread));
  return out;
}

Vec random_simplex(Rng& rng, int k) {
  Vec w(k);
  for (int i = 0; i < k; ++i) w(i) = -std::log(1.0 - rng.uniform());
  return w / w.sum();
}

TangentVector random_tangent(Rng& rng, const Point& q, double max_norm) {
  const Chart chart = Chart::orthonormal(q);
  Vec c(chart.dim());
  for (int i = 0; i < c.size(); ++i) c(i) = rng.normal();
  c *= rng.uniform(0.0, max_norm) / c.norm();
  return from_components(chart, c);
}

Mat random_orthogonal(Rng& rng, int n) {
  Mat g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) {
    if (r(i, i) < 0) q.col(i) *= -1.0;
  }
  return q;
}

Mat random_nonsingular(Rng& rng, int n, double max_condition) {
  Vec s(n);
  for (int i = 0; i < n; ++i) s(i) = std::exp(rng.uniform() * std::log(max_condition));
  return random_orthogonal(rng, n) * s.asDiagonal() * random_orthogonal(rng, n);
}

SpdMatrix random_spd(Rng& rng, int n, double condition) {
  const double half = 0.5 * std::log(condition);
  Vec l(n);
  for (int i = 0; i < n; ++i) l(i) = std::exp(rng.uniform(-half, half));
  const Mat q = random_orthogonal(rng, n);
  return SpdMatrix(q * l.asDiagonal() * q.transpose());
}

EmpiricalSample sample_uniform_sphere(int count, std::uint64_t seed) {
  Rng rng(seed);
  EmpiricalSample s;
  s.seed = seed;
  s.points.reserve(count);
  for (int i = 0; i < count; ++i) s.points.push_back(uniform_sphere(rng));
  return s;
}

}  // namespace covfield
