#include "covfield/error.hpp"
#include "covfield/log.hpp"
#include "covfield/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>

namespace covfield {

namespace {

constexpr double kArmijo = 1e-4;

// Returns +inf for iterates where H cannot be evaluated.
double safe_value(const RecoveryProblem& p, const Vec& f, bool* ridged) {
  try {
    const auto ev = p.evaluate(f);
    if (ridged != nullptr && !ev.ridged.empty()) *ridged = true;
    return ev.value;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NotSpd || e.kind() == ErrorKind::DomainError) {
      return std::numeric_limits<double>::infinity();
    }
    throw;
  }
}

// Clears rounding residue so every iterate is exactly feasible.
Vec clean(Vec f) {
  f = f.cwiseMax(0.0);
  return f / f.sum();
}

}  // namespace

Vec project_simplex(const Vec& v) {
  const auto n = v.size();
  if (n == 0) throw Error(ErrorKind::Validation, "cannot project an empty vector");
  Vec u = v;
  std::sort(u.data(), u.data() + n, std::greater<>());
  double css = 0.0, theta = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    css += u(j);
    const double t = (css - 1.0) / static_cast<double>(j + 1);
    if (u(j) - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

double projected_gradient_norm(const Vec& f, const Vec& g) {
  return (f - project_simplex(f - g)).norm();
}

Vec simplex_qp(const Mat& h, const Vec& c, const Vec& start) {
  const auto k = static_cast<int>(c.size());
  Vec x = clean(start);
  std::vector<bool> fixed(k);
  for (int i = 0; i < k; ++i) fixed[i] = x(i) <= 0.0;
  const double scale = std::max({1.0, h.cwiseAbs().maxCoeff(), c.cwiseAbs().maxCoeff()});
  const double mult_tol = 1e-13 * scale;

  for (int iter = 0; iter < 20 * k + 100; ++iter) {
    std::vector<int> free;
    for (int i = 0; i < k; ++i) {
      if (!fixed[i]) free.push_back(i);
    }
    if (free.empty()) {
      const Vec g = h * x + c;
      Eigen::Index best = 0;
      g.minCoeff(&best);
      fixed[best] = false;
      continue;
    }
    const auto m = static_cast<int>(free.size());
    // KKT on the free set: H_FF y + nu 1 = -c_F, 1'y = 1.
    Mat kkt = Mat::Zero(m + 1, m + 1);
    Vec rhs(m + 1);
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) kkt(a, b) = h(free[a], free[b]);
      kkt(a, m) = 1.0;
      kkt(m, a) = 1.0;
      rhs(a) = -c(free[a]);
    }
    rhs(m) = 1.0;
    const Vec sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    const double nu = sol(m);

    double alpha = 1.0;
    int blocking = -1;
    for (int a = 0; a < m; ++a) {
      const int i = free[a];
      if (sol(a) < 0.0 && x(i) - sol(a) > 0.0) {
        const double t = x(i) / (x(i) - sol(a));
        if (t < alpha) {
          alpha = t;
          blocking = i;
        }
      }
    }
    if (blocking >= 0) {
      for (int a = 0; a < m; ++a) x(free[a]) += alpha * (sol(a) - x(free[a]));
      x(blocking) = 0.0;
      fixed[blocking] = true;
      for (int a = 0; a < m; ++a) {
        if (x(free[a]) <= 0.0) {
          x(free[a]) = 0.0;
          fixed[free[a]] = true;
        }
      }
      continue;
    }
    for (int a = 0; a < m; ++a) x(free[a]) = std::max(0.0, sol(a));
    const Vec g = h * x + c;
    int release = -1;
    double worst = -mult_tol;
    for (int i = 0; i < k; ++i) {
      if (fixed[i] && g(i) + nu < worst) {
        worst = g(i) + nu;
        release = i;
      }
    }
    if (release < 0) return clean(x);
    fixed[release] = false;
  }
  log_message(LogLevel::Debug, "simplex QP hit its iteration limit");
  return clean(x);
}

RecoveryResult solve(const RecoveryProblem& problem, const SolverOptions& options) {
  const int k = problem.k();
  if (options.max_iter < 1 || !(options.grad_tol > 0.0) || !(options.step_init > 0.0)) {
    throw Error(ErrorKind::Validation, "solver tolerances must be positive");
  }
  RecoveryResult out;
  Vec f = options.initial.size() == 0 ? Vec::Constant(k, 1.0 / k) : Vec(options.initial);
  if (f.size() != k || f.minCoeff() < 0.0 || std::abs(f.sum() - 1.0) > 1e-12) {
    throw Error(ErrorKind::Validation, "initial weights must lie on the simplex");
  }
  f = clean(f);
  double value = safe_value(problem, f, &out.ridge_applied);
  if (!std::isfinite(value)) {
    throw Error(ErrorKind::NotSpd, "objective is not finite at the initial weights");
  }
  out.history.push_back(value);
  double step = options.step_init;

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const Vec g = problem.gradient(f);
    const double pg = projected_gradient_norm(f, g);
    if (log_enabled(LogLevel::Debug)) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "iter %d H=%.6e |Pg|=%.3e", iter, value, pg);
      log_message(LogLevel::Debug, buf);
    }
    if (pg <= options.grad_tol) {
      out.converged = true;
      break;
    }
    Vec d;
    double t = 1.0;
    if (options.method == SolverMethod::ProjectedNewton) {
      Mat h = problem.hessian(f);
      // Proximal term keeps the subproblem strictly convex when Y is rank deficient.
      const double delta = 1e-10 * std::max(h.diagonal().cwiseAbs().maxCoeff(), 1e-300);
      h.diagonal().array() += delta;
      d = simplex_qp(h, g - h * f, f) - f;
      if (log_enabled(LogLevel::Debug)) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "  |d|=%.3e g.d=%.3e", d.cwiseAbs().maxCoeff(), g.dot(d));
        log_message(LogLevel::Debug, buf);
      }
      // Predicted decrease at rounding level of H also counts as stationary.
      if (d.cwiseAbs().maxCoeff() <= 1e-14 || -g.dot(d) <= 1e-14 * std::abs(value)) {
        out.converged = true;
        break;
      }
    } else {
      t = step;
    }

    bool accepted = false;
    Vec next;
    double next_value = value;
    for (int halving = 0; halving < 80; ++halving) {
      if (options.method == SolverMethod::ProjectedNewton) {
        next = clean(f + t * d);
      } else {
        next = project_simplex(f - t * g);
        next = clean(next);
        d = next - f;
      }
      next_value = safe_value(problem, next, &out.ridge_applied);
      const double slope = options.method == SolverMethod::ProjectedNewton ? t * g.dot(d) : g.dot(d);
      // A step that no longer moves f is not progress, whatever Armijo says.
      if (next != f && next_value <= value + kArmijo * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No decrease at rounding level: stationary to working precision.
      out.converged = d.cwiseAbs().maxCoeff() <= 1e-9 || -g.dot(d) <= 1e-12 * std::abs(value);
      break;
    }
    f = next;
    value = next_value;
    out.iterations = iter;
    out.history.push_back(value);
    if (options.method == SolverMethod::ProjectedGradient) step = std::min(2.0 * t, 1e12);
  }

  out.weights = f;
  out.h_value = value;
  if (!out.converged) {
    log_message(LogLevel::Warn, "solver stopped after " + std::to_string(out.iterations) +
                                    " iterations without meeting the gradient tolerance");
  }
  return out;
}

RecoveryResult recover_pmf(const CovarianceSet& c, const std::vector<Point>& support,
                           const SolverOptions& options) {
  if (!is_convex(options.kind)) {
    throw Error(ErrorKind::Validation, "recovery needs a convex invariant (trdifsq, lik, trsq), got " +
                                           std::string(to_string(options.kind)));
  }
  const RecoveryProblem problem(c, support, options.kind);
  const RankReport rank = rank_diagnostic(problem.traces(), options.rank_tol);
  if (!rank.full_rank) {
    log_message(LogLevel::Warn, "Y has numerical rank " + std::to_string(rank.rank) + " < k = " +
                                    std::to_string(problem.k()) + "; the minimizer may not be unique");
  }
  RecoveryResult out = solve(problem, options);
  out.rank = rank;
  out.rank_deficient = !rank.full_rank;
  return out;
}

}  // namespace covfield
