#include "covfield/partition.hpp"

#include "covfield/error.hpp"

#include <cmath>
#include <numbers>

namespace covfield {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_phi(double phi) {
  phi = std::fmod(phi, kTwoPi);
  return phi < 0.0 ? phi + kTwoPi : phi;
}

}  // namespace

Point spherical_point(double theta, double phi) {
  Vec x(3);
  x << std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta);
  return Point::project(Manifold::sphere2(), x);
}

bool CapCell::contains(const Point& p) const {
  const double theta = std::acos(std::clamp(p[2], -1.0, 1.0));
  if (theta < theta0 || theta > theta1) return false;
  if (theta == 0.0) return theta0 == 0.0;
  const double phi = wrap_phi(std::atan2(p[1], p[0]));
  return phi >= phi0 && phi <= phi1;
}

Point CapCell::center() const {
  const double z = 0.5 * (std::cos(theta0) + std::cos(theta1));
  return spherical_point(std::acos(z), 0.5 * (phi0 + phi1));
}

Point CapCell::sample(Rng& rng) const {
  const double z = rng.uniform(std::cos(theta1), std::cos(theta0));
  return spherical_point(std::acos(std::clamp(z, -1.0, 1.0)), rng.uniform(phi0, phi1));
}

int CapPartition::locate(const Point& p) const {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].contains(p)) return static_cast<int>(i);
  }
  return -1;
}

double cell_diameter(double theta0, double theta1, double phi0, double phi1, int per_edge) {
  std::vector<Point> pts;
  pts.reserve(4 * per_edge);
  for (int s = 0; s < per_edge; ++s) {
    const double u = per_edge == 1 ? 0.0 : static_cast<double>(s) / (per_edge - 1);
    const double theta = theta0 + u * (theta1 - theta0);
    const double phi = phi0 + u * (phi1 - phi0);
    pts.push_back(spherical_point(theta, phi0));
    pts.push_back(spherical_point(theta, phi1));
    pts.push_back(spherical_point(theta0, phi));
    pts.push_back(spherical_point(theta1, phi));
  }
  double best = 0.0;
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = a + 1; b < pts.size(); ++b) best = std::max(best, distance(pts[a], pts[b]));
  }
  return best;
}

CapPartition partition_cap(double radius, double max_diameter) {
  if (!(radius > 0.0) || radius >= std::numbers::pi) {
    throw Error(ErrorKind::Validation, "cap radius must lie in (0, pi)");
  }
  if (!(max_diameter > 0.0)) throw Error(ErrorKind::Validation, "cell diameter must be positive");

  const double span = 1.0 - std::cos(radius);
  for (int bands = 1; bands < 10000; ++bands) {
    CapPartition out{radius, max_diameter, {}};
    bool ok = true;
    for (int b = 0; b < bands && ok; ++b) {
      const double t0 = std::acos(std::clamp(1.0 - b * span / bands, -1.0, 1.0));
      const double t1 = std::acos(std::clamp(1.0 - (b + 1) * span / bands, -1.0, 1.0));
      // A zero-width sector wider than the limit means the band is too tall.
      if (t1 - t0 > max_diameter) {
        ok = false;
        break;
      }
      // Narrower sectors are subsets, so the diameter is monotone in the
      // sector count: double to bracket, then bisect for the fewest.
      auto fits = [&](int s) { return cell_diameter(t0, t1, 0.0, kTwoPi / s) <= max_diameter; };
      int hi = 1;
      while (hi < (1 << 20) && !fits(hi)) hi *= 2;
      int sectors = 0;
      if (fits(hi)) {
        int lo = hi / 2;  // lo fails (or is 0)
        while (hi - lo > 1) {
          const int mid = lo + (hi - lo) / 2;
          (fits(mid) ? hi : lo) = mid;
        }
        sectors = hi;
      }
      if (sectors == 0) {
        ok = false;
        break;
      }
      const double width = kTwoPi / sectors;
      const double area = (std::cos(t0) - std::cos(t1)) * width;
      const double diam = cell_diameter(t0, t1, 0.0, width);
      for (int s = 0; s < sectors; ++s) {
        const double p1 = s + 1 == sectors ? kTwoPi : (s + 1) * width;
        out.cells.push_back(CapCell{t0, t1, s * width, p1, area, diam});
      }
    }
    if (ok) return out;
  }
  throw Error(ErrorKind::NoConvergence, "could not partition the cap");
}

}  // namespace covfield
