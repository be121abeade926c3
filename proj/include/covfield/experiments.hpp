#pragma once

#include "covfield/kernels.hpp"
#include "covfield/recovery.hpp"

#include <cstdint>
#include <vector>

namespace covfield {

struct DemoS2Report {
  int k = 0;
  std::uint64_t seed = 0;
  Amplitude adjusted = Amplitude::unit();
  PairwiseStats unit_stats;
  PairwiseStats adjusted_stats;
  double unit_target = 0.0;      // pi^2/2 - 2
  double adjusted_target = 0.0;  // pi^2/4 - 2 for a = pi/2
  double unit_z = 0.0;
  double adjusted_z = 0.0;
  /// Per-pair ratio of the two estimates (about 6.28 in the limit).
  double ratio = 0.0;
};

/// E d^2(y, y') r(d(y, y')) for independent uniform y, y' on S^2:
/// (1/2) integral_0^pi (t - a)^2 sin t dt, or pi^2/2 - 2 for r = 1.
double uniform_sphere_pair_expectation(const Amplitude& r);

DemoS2Report demo_s2(int k, std::uint64_t seed, const Amplitude& adjusted);

struct RankTrial {
  int trial = 0;
  RankReport report;
};

struct RankScanReport {
  Manifold manifold = Manifold::sphere2();
  int k = 0;
  int trials = 0;
  Amplitude amplitude = Amplitude::unit();
  double rel_tol = 1e-9;
  std::vector<RankTrial> rows;
  int min_rank = 0;
  int max_rank = 0;
  int full_rank_count = 0;
};

/// Per trial: k random points used as both support and observation set
/// (the default sampler of random_point), rank of Y.
RankScanReport rank_scan(const Manifold& m, int k, int trials, const Amplitude& r,
                         std::uint64_t seed, double rel_tol = 1e-9, double spread = -1.0);

struct SyntheticProblem {
  std::vector<Point> support;
  std::vector<Point> observations;
  Vec truth;
};

/// k support points and k separate observation points from random_point,
/// with observations redrawn while any lies within 0.01 of the antipode of
/// a support point; truth is a flat Dirichlet draw.
SyntheticProblem synthetic_problem(const Manifold& m, int k, std::uint64_t seed,
                                   double spread = -1.0);

/// Regular grid for the field command: latitude/longitude on S^2 (with
/// extent = polar radius), polar grid on H^2 (extent = radius), square box
/// of half-width extent on R^2, or the axis segment on R^n otherwise.
std::vector<Point> make_grid(const Manifold& m, int resolution, double extent);

}  // namespace covfield
