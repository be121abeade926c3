#include "covfield/manifold.hpp"

#include "covfield/error.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

namespace covfield {

namespace {

void require_same_manifold(const Point& a, const Point& b) {
  if (!(a.manifold() == b.manifold())) {
    throw Error(ErrorKind::Validation, "points belong to different manifolds: " +
                                           a.manifold().tag() + " vs " + b.manifold().tag());
  }
}

// Unit vector orthogonal to q, used where any direction will do.
Vec any_orthogonal(const Vec& q) {
  Eigen::Index axis = 0;
  q.cwiseAbs().minCoeff(&axis);
  Vec e = Vec::Zero(q.size());
  e(axis) = 1.0;
  Vec u = e - e.dot(q) * q;
  return u / u.norm();
}

}  // namespace

Manifold Manifold::euclidean(int n) {
  if (n < 1) throw Error(ErrorKind::Validation, "euclidean dimension must be positive");
  return Manifold(ManifoldKind::Euclidean, n);
}

Manifold Manifold::sphere2() { return Manifold(ManifoldKind::Sphere2, 2); }

Manifold Manifold::hyperbolic2() { return Manifold(ManifoldKind::Hyperbolic2, 2); }

Manifold Manifold::parse(std::string_view tag) {
  if (tag == "sphere2") return sphere2();
  if (tag == "hyperbolic2") return hyperbolic2();
  constexpr std::string_view prefix = "euclidean:";
  if (tag.starts_with(prefix)) {
    const auto digits = tag.substr(prefix.size());
    int n = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && n >= 1) {
      return euclidean(n);
    }
  }
  throw Error(ErrorKind::Validation, "unknown manifold tag '" + std::string(tag) + "'");
}

double Manifold::injectivity_radius() const {
  return kind_ == ManifoldKind::Sphere2 ? std::numbers::pi
                                        : std::numeric_limits<double>::infinity();
}

std::string Manifold::tag() const {
  switch (kind_) {
    case ManifoldKind::Euclidean: return "euclidean:" + std::to_string(dim_);
    case ManifoldKind::Sphere2: return "sphere2";
    case ManifoldKind::Hyperbolic2: return "hyperbolic2";
  }
  return "?";
}

Point::Point(Manifold manifold, Vec coords, double tol) : manifold_(manifold) {
  if (coords.size() != manifold.ambient_dimension()) {
    throw Error(ErrorKind::Validation, "point has " + std::to_string(coords.size()) +
                                           " coordinates, expected " +
                                           std::to_string(manifold.ambient_dimension()));
  }
  if (!coords.allFinite()) throw Error(ErrorKind::Validation, "point has non-finite coordinates");
  switch (manifold.kind()) {
    case ManifoldKind::Euclidean:
      break;
    case ManifoldKind::Sphere2:
      if (std::abs(coords.norm() - 1.0) > tol) {
        throw Error(ErrorKind::Validation, "sphere point is not unit length");
      }
      break;
    case ManifoldKind::Hyperbolic2: {
      const double lorentz = coords(2) * coords(2) - coords(0) * coords(0) - coords(1) * coords(1);
      if (coords(2) <= 0.0 || std::abs(lorentz - 1.0) > tol * std::max(1.0, coords(2) * coords(2))) {
        throw Error(ErrorKind::Validation, "point is not on the upper hyperboloid sheet");
      }
      break;
    }
  }
  coords_ = project(manifold, std::move(coords)).coords_;
}

Point Point::project(Manifold manifold, Vec coords) {
  switch (manifold.kind()) {
    case ManifoldKind::Euclidean:
      break;
    case ManifoldKind::Sphere2:
      coords /= coords.norm();
      break;
    case ManifoldKind::Hyperbolic2:
      coords(2) = std::sqrt(1.0 + coords(0) * coords(0) + coords(1) * coords(1));
      break;
  }
  return Point(manifold, std::move(coords), Unchecked{});
}

TangentVector::TangentVector(Point base, Vec components, double tol)
    : base_(std::move(base)), v_(std::move(components)) {
  const Vec& q = base_.coords();
  if (v_.size() != q.size()) {
    throw Error(ErrorKind::Validation, "tangent vector has wrong ambient dimension");
  }
  if (!v_.allFinite()) throw Error(ErrorKind::Validation, "tangent vector is not finite");
  switch (base_.manifold().kind()) {
    case ManifoldKind::Euclidean:
      break;
    case ManifoldKind::Sphere2: {
      const double off = v_.dot(q);
      if (std::abs(off) > tol * std::max(1.0, v_.norm())) {
        throw Error(ErrorKind::Validation, "vector is not tangent to the sphere");
      }
      v_ -= off * q;
      break;
    }
    case ManifoldKind::Hyperbolic2: {
      const double off = minkowski(v_, q);
      const double scale = std::max(1.0, v_.cwiseAbs().maxCoeff() * q.cwiseAbs().maxCoeff());
      if (std::abs(off) > tol * scale) {
        throw Error(ErrorKind::Validation, "vector is not tangent to the hyperboloid");
      }
      v_ += off * q;
      break;
    }
  }
}

TangentVector TangentVector::zero(const Point& base) {
  return TangentVector(base, Vec::Zero(base.coords().size()));
}

TangentVector TangentVector::project(const Point& base, const Vec& ambient) {
  const Vec& q = base.coords();
  switch (base.manifold().kind()) {
    case ManifoldKind::Euclidean:
      return TangentVector(base, ambient);
    case ManifoldKind::Sphere2:
      return TangentVector(base, ambient - ambient.dot(q) * q);
    case ManifoldKind::Hyperbolic2:
      return TangentVector(base, ambient + minkowski(ambient, q) * q);
  }
  return TangentVector(base, ambient);
}

double minkowski(const Vec& a, const Vec& b) { return a(0) * b(0) + a(1) * b(1) - a(2) * b(2); }

double inner(const Point& at, const Vec& a, const Vec& b) {
  return at.manifold().kind() == ManifoldKind::Hyperbolic2 ? minkowski(a, b) : a.dot(b);
}

double norm(const TangentVector& v) {
  return std::sqrt(std::max(0.0, inner(v.base(), v.components(), v.components())));
}

bool same_point(const Point& a, const Point& b, double tol) {
  if (!(a.manifold() == b.manifold())) return false;
  const double scale = std::max(1.0, a.coords().cwiseAbs().maxCoeff());
  return (a.coords() - b.coords()).cwiseAbs().maxCoeff() <= tol * scale;
}

double distance(const Point& q, const Point& p) {
  require_same_manifold(q, p);
  return coordinate_distance(q.manifold().kind(), q.coords().data(), p.coords().data(),
                             q.manifold().ambient_dimension());
}

Point exp_map(const Point& q, const TangentVector& v, bool wraparound,
              const GeometryTolerances& tol) {
  if (!same_point(q, v.base(), tol.base_match)) {
    throw Error(ErrorKind::MismatchedBase, "tangent vector is not based at q");
  }
  const Vec& x = q.coords();
  const Vec& w = v.components();
  switch (q.manifold().kind()) {
    case ManifoldKind::Euclidean:
      return Point(q.manifold(), x + w);
    case ManifoldKind::Sphere2: {
      const double t = w.norm();
      if (t >= std::numbers::pi && !wraparound) {
        throw Error(ErrorKind::CutLocus, "|v| = " + std::to_string(t) +
                                             " reaches the sphere's injectivity radius");
      }
      if (t == 0.0) return q;
      return Point::project(q.manifold(), std::cos(t) * x + (std::sin(t) / t) * w);
    }
    case ManifoldKind::Hyperbolic2: {
      const double t = std::sqrt(std::max(0.0, minkowski(w, w)));
      if (t == 0.0) return q;
      return Point::project(q.manifold(), std::cosh(t) * x + (std::sinh(t) / t) * w);
    }
  }
  return q;
}

namespace {

// Shared by the strict and lenient variants; `antipodal` is set when p sits
// within the tolerance of q's cut locus.
TangentVector log_impl(const Point& q, const Point& p, const GeometryTolerances& tol,
                       bool& antipodal) {
  require_same_manifold(q, p);
  antipodal = false;
  const Vec& x = q.coords();
  const Vec delta = p.coords() - x;
  switch (q.manifold().kind()) {
    case ManifoldKind::Euclidean:
      return TangentVector(q, delta);
    case ManifoldKind::Sphere2: {
      const double angle = distance(q, p);
      if (angle > std::numbers::pi - tol.antipodal) {
        antipodal = true;
        return TangentVector(q, angle * any_orthogonal(x));
      }
      const Vec u = delta - x.dot(delta) * x;
      const double s = u.norm();
      if (s == 0.0) return TangentVector::zero(q);
      return TangentVector::project(q, (angle / s) * u);
    }
    case ManifoldKind::Hyperbolic2: {
      // u = p - cosh(d) q, with cosh(d) - 1 = |p - q|_L^2 / 2.
      const double chord2 = std::max(0.0, minkowski(delta, delta));
      const Vec u = delta - 0.5 * chord2 * x;
      const double s = std::sqrt(std::max(0.0, minkowski(u, u)));
      if (s == 0.0) return TangentVector::zero(q);
      return TangentVector::project(q, (std::asinh(s) / s) * u);
    }
  }
  return TangentVector::zero(q);
}

}  // namespace

TangentVector log_map(const Point& q, const Point& p, const GeometryTolerances& tol) {
  bool antipodal = false;
  TangentVector v = log_impl(q, p, tol, antipodal);
  if (antipodal) {
    throw Error(ErrorKind::CutLocus, "point is antipodal to the base point");
  }
  return v;
}

LenientLog log_map_lenient(const Point& q, const Point& p, const GeometryTolerances& tol) {
  bool antipodal = false;
  TangentVector v = log_impl(q, p, tol, antipodal);
  return LenientLog{std::move(v), antipodal};
}

}  // namespace covfield
