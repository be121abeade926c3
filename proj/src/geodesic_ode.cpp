#include "covfield/error.hpp"
#include "covfield/manifold.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace covfield {

namespace {

// Chart state (x1, x2, y1, y2): position and velocity in chart coordinates.
using State = std::array<double, 4>;

State axpy(const State& s, double h, const State& k) {
  return {s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2], s[3] + h * k[3]};
}

template <typename Rhs>
State rk4(State s, double t, int steps, Rhs&& rhs) {
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const State k1 = rhs(s);
    const State k2 = rhs(axpy(s, 0.5 * h, k1));
    const State k3 = rhs(axpy(s, 0.5 * h, k2));
    const State k4 = rhs(axpy(s, h, k3));
    for (int c = 0; c < 4; ++c) {
      s[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
  }
  return s;
}

// Polar chart (theta, phi) about a pole axis `a`, with x = cos(theta) a +
// sin(theta) (cos(phi) b1 + sin(phi) b2). Christoffel symbols of the round
// metric: G^theta_{phi phi} = -sin cos, G^phi_{theta phi} = cot.
Point sphere_ode(const Point& q, const Vec& v, double t, int steps) {
  const Eigen::Vector3d x0(q[0], q[1], q[2]);
  const Eigen::Vector3d w(v(0), v(1), v(2));
  const double speed = w.norm();
  if (speed == 0.0 || t == 0.0) return q;
  const Eigen::Vector3d dir = w / speed;
  const Eigen::Vector3d normal = x0.cross(dir);
  // Pole tilted 45 degrees out of the geodesic's plane keeps the trajectory
  // at least pi/4 away from the chart singularity.
  const Eigen::Vector3d a = (normal + dir).normalized();
  const Eigen::Vector3d b1 = x0;
  const Eigen::Vector3d b2 = a.cross(b1);

  // q sits at theta = pi/2, phi = 0 where e_theta = -a and e_phi = b2.
  State s{std::numbers::pi / 2.0, 0.0, -w.dot(a), w.dot(b2)};
  auto rhs = [](const State& st) -> State {
    const double sn = std::sin(st[0]);
    const double cs = std::cos(st[0]);
    if (std::abs(sn) < 1e-8) {
      throw Error(ErrorKind::ChartOverflow, "geodesic reached the polar chart's pole");
    }
    return {st[2], st[3], sn * cs * st[3] * st[3], -2.0 * cs / sn * st[2] * st[3]};
  };
  s = rk4(s, t, steps, rhs);
  const Eigen::Vector3d x = std::cos(s[0]) * a +
                            std::sin(s[0]) * (std::cos(s[1]) * b1 + std::sin(s[1]) * b2);
  return Point::project(q.manifold(), Vec(x));
}

// Graph chart u -> (u1, u2, sqrt(1 + |u|^2)). Induced metric
// g_ij = delta_ij - u_i u_j / (1 + |u|^2) with Christoffel symbols
// G^k_ij = -u_k g_ij, so u'' = u g(u', u').
Point hyperbolic_ode(const Point& q, const Vec& v, double t, int steps) {
  State s{q[0], q[1], v(0), v(1)};
  auto rhs = [](const State& st) -> State {
    const double uu = st[0] * st[0] + st[1] * st[1];
    const double udu = st[0] * st[2] + st[1] * st[3];
    const double dudu = st[2] * st[2] + st[3] * st[3];
    const double g = dudu - udu * udu / (1.0 + uu);
    return {st[2], st[3], st[0] * g, st[1] * g};
  };
  s = rk4(s, t, steps, rhs);
  Vec x(3);
  x << s[0], s[1], 0.0;
  return Point::project(q.manifold(), x);
}

}  // namespace

Point geodesic_ode(const Point& q, const TangentVector& v, double t, int steps) {
  if (!same_point(q, v.base())) {
    throw Error(ErrorKind::MismatchedBase, "tangent vector is not based at q");
  }
  if (steps < 1) throw Error(ErrorKind::Validation, "geodesic_ode needs steps >= 1");
  switch (q.manifold().kind()) {
    case ManifoldKind::Euclidean: {
      // Zero Christoffel symbols: each coordinate integrates x'' = 0.
      Vec x = q.coords();
      Vec y = v.components();
      const double h = t / steps;
      for (int i = 0; i < steps; ++i) x += h * y;
      return Point(q.manifold(), x);
    }
    case ManifoldKind::Sphere2:
      return sphere_ode(q, v.components(), t, steps);
    case ManifoldKind::Hyperbolic2:
      return hyperbolic_ode(q, v.components(), t, steps);
  }
  return q;
}

}  // namespace covfield
