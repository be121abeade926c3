#pragma once

#include "covfield/spd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>

namespace covfield {

enum class ManifoldKind { Euclidean, Sphere2, Hyperbolic2 };

/// One of the three model spaces. Points live in ambient coordinates:
/// R^n itself, the unit sphere in R^3, or the upper sheet of the hyperboloid
/// x3^2 - x1^2 - x2^2 = 1 in Minkowski space R^{2,1}.
class Manifold {
 public:
  static Manifold euclidean(int n);
  static Manifold sphere2();
  static Manifold hyperbolic2();
  /// "euclidean:n", "sphere2" or "hyperbolic2".
  static Manifold parse(std::string_view tag);

  ManifoldKind kind() const { return kind_; }
  int dimension() const { return dim_; }
  int ambient_dimension() const { return kind_ == ManifoldKind::Euclidean ? dim_ : 3; }
  /// pi on the sphere, infinity elsewhere.
  double injectivity_radius() const;
  bool curved() const { return kind_ != ManifoldKind::Euclidean; }
  std::string tag() const;

  friend bool operator==(const Manifold&, const Manifold&) = default;

 private:
  Manifold(ManifoldKind kind, int dim) : kind_(kind), dim_(dim) {}

  ManifoldKind kind_;
  int dim_;
};

struct GeometryTolerances {
  double embedding = 1e-12;
  double tangency = 1e-10;
  /// Strict log refuses angles > pi - antipodal.
  double antipodal = 1e-6;
  double base_match = 1e-12;
};

/// A point in ambient coordinates. The constructor checks the embedding
/// constraint (unit norm, or Minkowski norm -1 with x3 > 0) and then
/// re-projects so the stored coordinates satisfy it to rounding.
class Point {
 public:
  Point(Manifold manifold, Vec coords, double tol = GeometryTolerances{}.embedding);

  /// Projects arbitrary ambient coordinates onto the manifold. Used after
  /// closed-form maps where drift is expected.
  static Point project(Manifold manifold, Vec coords);

  const Manifold& manifold() const { return manifold_; }
  const Vec& coords() const { return coords_; }
  double operator[](int i) const { return coords_(i); }

 private:
  struct Unchecked {};
  Point(Manifold manifold, Vec coords, Unchecked) : manifold_(manifold), coords_(std::move(coords)) {}

  Manifold manifold_;
  Vec coords_;
};

/// Tangent vector at `base`, stored in the same ambient space.
class TangentVector {
 public:
  TangentVector(Point base, Vec components, double tol = GeometryTolerances{}.tangency);

  static TangentVector zero(const Point& base);
  /// Orthogonal projection of an ambient vector onto the tangent space.
  static TangentVector project(const Point& base, const Vec& ambient);

  const Point& base() const { return base_; }
  const Vec& components() const { return v_; }

 private:
  Point base_;
  Vec v_;
};

/// Lorentzian product x1 y1 + x2 y2 - x3 y3.
double minkowski(const Vec& a, const Vec& b);

/// Riemannian inner product of two ambient tangent vectors at `at`.
double inner(const Point& at, const Vec& a, const Vec& b);
double norm(const TangentVector& v);

bool same_point(const Point& a, const Point& b, double tol = GeometryTolerances{}.base_match);

/// Geodesic distance. Sphere: atan2(|q x p|, q.p) (antipodes give pi);
/// hyperboloid: 2 asinh of half the Minkowski chord.
double distance(const Point& q, const Point& p);

/// Same formulas on raw ambient coordinates; the kernels call this directly.
inline double coordinate_distance(ManifoldKind kind, const double* a, const double* b, int ambient) {
  switch (kind) {
    case ManifoldKind::Euclidean: {
      double s = 0.0;
      for (int i = 0; i < ambient; ++i) s += (b[i] - a[i]) * (b[i] - a[i]);
      return std::sqrt(s);
    }
    case ManifoldKind::Sphere2: {
      const double cx = a[1] * b[2] - a[2] * b[1];
      const double cy = a[2] * b[0] - a[0] * b[2];
      const double cz = a[0] * b[1] - a[1] * b[0];
      return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz),
                        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]);
    }
    case ManifoldKind::Hyperbolic2: {
      // 2 asinh(|p - q|_L / 2) stays accurate for nearby points.
      const double d0 = b[0] - a[0], d1 = b[1] - a[1], d2 = b[2] - a[2];
      const double chord2 = std::max(0.0, d0 * d0 + d1 * d1 - d2 * d2);
      return 2.0 * std::asinh(0.5 * std::sqrt(chord2));
    }
  }
  return 0.0;
}

/// exp_q(v). On the sphere ||v|| >= pi raises CutLocus unless `wraparound`.
Point exp_map(const Point& q, const TangentVector& v, bool wraparound = false,
              const GeometryTolerances& tol = {});

/// exp_q^{-1}(p). Raises CutLocus when p is (near) antipodal to q on S^2.
TangentVector log_map(const Point& q, const Point& p, const GeometryTolerances& tol = {});

struct LenientLog {
  TangentVector vector;
  /// Set when p was at the cut locus and the direction is arbitrary.
  bool cut_locus = false;
};

/// Like log_map but returns a length-pi vector in an arbitrary direction at
/// the antipode instead of throwing.
LenientLog log_map_lenient(const Point& q, const Point& p, const GeometryTolerances& tol = {});

/// Fixed-step RK4 integration of the geodesic equations in a coordinate
/// chart: a polar chart on S^2 whose pole is kept 45 degrees off the
/// geodesic, and the graph chart (x1, x2) on the hyperboloid. Independent of
/// exp_map; kept as its verification oracle.
Point geodesic_ode(const Point& q, const TangentVector& v, double t, int steps);

}  // namespace covfield
