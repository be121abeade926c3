#pragma once

#include "covfield/manifold.hpp"
#include "covfield/sampling.hpp"

#include <vector>

namespace covfield {

/// Polar rectangle theta in [theta0, theta1], phi in [phi0, phi1] around
/// the north pole of S^2.
struct CapCell {
  double theta0 = 0.0;
  double theta1 = 0.0;
  double phi0 = 0.0;
  double phi1 = 0.0;
  double area = 0.0;
  /// Geodesic diameter estimated from boundary samples.
  double diameter = 0.0;

  bool contains(const Point& p) const;
  /// Point at the middle of the cell in (cos theta, phi).
  Point center() const;
  /// Area-uniform draw from the cell.
  Point sample(Rng& rng) const;
};

struct CapPartition {
  double radius = 0.0;
  double max_diameter = 0.0;
  std::vector<CapCell> cells;

  /// Index of the cell containing p, or -1.
  int locate(const Point& p) const;
};

/// Equal-area latitude bands, each split into the fewest equal longitude
/// sectors whose diameter is <= max_diameter; the band count grows until
/// every band can be split that way.
CapPartition partition_cap(double radius, double max_diameter);

/// Largest pairwise distance among `per_edge` samples on each boundary edge.
double cell_diameter(double theta0, double theta1, double phi0, double phi1, int per_edge = 16);

Point spherical_point(double theta, double phi);

}  // namespace covfield
