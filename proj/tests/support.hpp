#pragma once

#include "covfield/error.hpp"
#include "covfield/manifold.hpp"
#include "covfield/sampling.hpp"

#include <doctest.h>

#include <functional>
#include <vector>

namespace covfield::testing {

inline const std::vector<Manifold>& all_manifolds() {
  static const std::vector<Manifold> ms{Manifold::euclidean(2), Manifold::euclidean(3),
                                        Manifold::sphere2(), Manifold::hyperbolic2()};
  return ms;
}

inline Point pt(const Manifold& m, std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return Point(m, v);
}

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a covfield::Error");
  return ErrorKind::Validation;
}

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace covfield::testing
