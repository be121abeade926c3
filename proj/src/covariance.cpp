#include "covfield/covariance.hpp"

#include "covfield/error.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace covfield {

namespace {

double parse_double(std::string_view text, std::string_view context) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::Validation,
                "bad number '" + std::string(text) + "' in " + std::string(context));
  }
  return v;
}

}  // namespace

Amplitude Amplitude::one_minus_over_t(double a) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw Error(ErrorKind::Validation, "amplitude parameter a must be positive");
  }
  return Amplitude(Kind::OneMinusOverT, a);
}

Amplitude Amplitude::parse(std::string_view spec) {
  if (spec == "unit") return unit();
  if (spec.starts_with("a=")) return one_minus_over_t(parse_double(spec.substr(2), spec));
  if (spec.starts_with("optimal:R=")) {
    return optimal_amplitude(parse_double(spec.substr(10), spec));
  }
  throw Error(ErrorKind::Validation, "unknown amplitude '" + std::string(spec) + "'");
}

std::string Amplitude::tag() const {
  if (kind_ == Kind::Unit) return "unit";
  std::ostringstream os;
  os.precision(17);
  os << "a=" << a_;
  return os.str();
}

double Amplitude::operator()(double t) const {
  if (kind_ == Kind::Unit) return 1.0;
  const double s = 1.0 - a_ / t;
  return s * s;
}

double Amplitude::outer_weight(double t) const {
  if (kind_ == Kind::Unit) return 1.0;
  if (t == 0.0) return 0.0;
  return (*this)(t);
}

Amplitude optimal_amplitude(double geodesic_radius) {
  if (!(geodesic_radius > 0.0)) {
    throw Error(ErrorKind::Validation, "geodesic radius must be positive");
  }
  return Amplitude::one_minus_over_t(geodesic_radius / 2.0);
}

double amplitude_trace_integral(double geodesic_radius, double a) {
  const double r = geodesic_radius;
  return r * (r * r / 3.0 - a * r + a * a);
}

Pmf::Pmf(std::vector<Point> support, Vec weights, double tol)
    : support_(std::move(support)), weights_(std::move(weights)) {
  if (support_.empty()) throw Error(ErrorKind::Validation, "pmf support is empty");
  if (static_cast<Eigen::Index>(support_.size()) != weights_.size()) {
    throw Error(ErrorKind::Validation, "pmf support and weights differ in length");
  }
  for (const auto& p : support_) {
    if (!(p.manifold() == support_.front().manifold())) {
      throw Error(ErrorKind::Validation, "pmf support mixes manifolds");
    }
  }
  if (!weights_.allFinite() || weights_.minCoeff() < -tol) {
    throw Error(ErrorKind::Validation, "pmf weights must be nonnegative");
  }
  if (std::abs(weights_.sum() - 1.0) > tol) {
    throw Error(ErrorKind::Validation, "pmf weights must sum to 1");
  }
  weights_ = weights_.cwiseMax(0.0);
}

Pmf Pmf::point_mass(const Point& p) { return Pmf({p}, Vec::Ones(1)); }

Pmf Pmf::uniform(std::vector<Point> support) {
  const auto k = static_cast<Eigen::Index>(support.size());
  if (k == 0) throw Error(ErrorKind::Validation, "pmf support is empty");
  Vec w = Vec::Constant(k, 1.0 / static_cast<double>(k));
  w(k - 1) = 1.0 - w.head(k - 1).sum();
  return Pmf(std::move(support), std::move(w));
}

SpdMatrix z_tensor(const Point& q, const Point& p, const Chart& chart) {
  return weighted_z_tensor(q, p, chart, Amplitude::unit());
}

SpdMatrix weighted_z_tensor(const Point& q, const Point& p, const Chart& chart,
                            const Amplitude& r) {
  if (!same_point(q, chart.base())) {
    throw Error(ErrorKind::MismatchedBase, "chart is not based at q");
  }
  const TangentVector v = log_map(q, p);
  const Vec c = components(chart, v);
  return SpdMatrix(r.outer_weight(norm(v)) * (c * c.transpose()));
}

CovarianceTensor covariance_at(const Point& q, const Pmf& f, const Amplitude& r,
                               const Chart& chart) {
  if (!same_point(q, chart.base())) {
    throw Error(ErrorKind::MismatchedBase, "chart is not based at q");
  }
  const int n = chart.dim();
  Mat sigma = Mat::Zero(n, n);
  std::vector<int> offending;
  for (int i = 0; i < f.size(); ++i) {
    const LenientLog lg = log_map_lenient(q, f.support()[i]);
    if (lg.cut_locus) {
      offending.push_back(i);
      continue;
    }
    const Vec c = components(chart, lg.vector);
    sigma.noalias() += (f.weights()(i) * r.outer_weight(norm(lg.vector))) * (c * c.transpose());
  }
  if (!offending.empty()) {
    std::string list;
    for (int i : offending) list += (list.empty() ? "" : ",") + std::to_string(i);
    throw Error(ErrorKind::CutLocus, "support points outside U(q): " + list);
  }
  CovarianceTensor out{q, SpdMatrix(sigma), r, false};
  const Vec ev = out.sigma.eigenvalues();
  out.degenerate = !(ev(ev.size() - 1) > 0.0) || ev(0) <= 1e-12 * ev(ev.size() - 1);
  return out;
}

CovarianceTensor covariance_at(const Point& q, const Pmf& f, const Amplitude& r) {
  return covariance_at(q, f, r, Chart::orthonormal(q));
}

double operator_quadratic_form(const Chart& chart, const CovarianceTensor& sigma,
                               const TangentVector& v, const TangentVector& w) {
  const Vec vx = components(chart, v);
  const Vec wx = components(chart, w);
  const Mat& g = chart.gram();
  return wx.dot(g * sigma.sigma.matrix() * g * vx);
}

Vec operator_eigenvalues(const Chart& chart, const CovarianceTensor& sigma) {
  // G Sigma is similar to the symmetric G^{1/2} Sigma G^{1/2}.
  Eigen::SelfAdjointEigenSolver<Mat> es(chart.gram());
  const Mat root = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
                   es.eigenvectors().transpose();
  const Mat sym = root * sigma.sigma.matrix() * root;
  return SpdMatrix(0.5 * (sym + sym.transpose())).eigenvalues();
}

double trace_field(const Point& q, const Pmf& f, const Amplitude& r) {
  const double limit = q.manifold().injectivity_radius() - GeometryTolerances{}.antipodal;
  double total = 0.0;
  for (int i = 0; i < f.size(); ++i) {
    const double d = distance(q, f.support()[i]);
    if (d > limit) {
      throw Error(ErrorKind::CutLocus,
                  "support point " + std::to_string(i) + " is outside U(q)");
    }
    total += f.weights()(i) * r.weighted_square(d);
  }
  return total;
}

MeanResult intrinsic_mean(const Pmf& f, const Point& init, const MeanOptions& options) {
  Point q = init;
  double step = options.step;
  double value = trace_field(q, f, Amplitude::unit());
  auto gradient = [&f](const Point& at) {
    Vec grad = Vec::Zero(at.coords().size());
    for (int i = 0; i < f.size(); ++i) {
      grad += f.weights()(i) * log_map(at, f.support()[i]).components();
    }
    return grad;
  };
  for (int iter = 0; iter <= options.max_iter; ++iter) {
    const Vec grad = gradient(q);
    const TangentVector g(q, grad);
    const double gnorm = norm(g);
    if (gnorm <= options.tol) return MeanResult{q, iter, gnorm};
    if (iter == options.max_iter) break;

    bool moved = false;
    for (int halving = 0; halving < 60; ++halving) {
      TangentVector stepv(q, step * grad);
      const Point candidate = exp_map(q, stepv, true);
      const double cand_value = trace_field(candidate, f, Amplitude::unit());
      // Near the minimum the decrease is below rounding; a tie that shrinks
      // the gradient still counts as progress.
      const bool tie = cand_value <= value + 4e-16 * std::abs(value) &&
                       norm(TangentVector(candidate, gradient(candidate))) < gnorm;
      if (cand_value < value || tie) {
        q = candidate;
        value = cand_value;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) return MeanResult{q, iter, gnorm};
    step = std::min(options.step, 2.0 * step);
  }
  throw Error(ErrorKind::NoConvergence, "intrinsic mean did not converge");
}

ContinuityReport continuity_probe(const Pmf& f, const Point& q0, const Amplitude& r,
                                  const std::vector<Point>& trajectory) {
  ContinuityReport rep;
  const Chart chart0 = Chart::orthonormal(q0);
  const CovarianceTensor s0 = covariance_at(q0, f, r, chart0);
  const Mat form0 = s0.sigma.matrix();
  const Vec eig0 = operator_eigenvalues(chart0, s0);
  rep.reference_trace = trace_field(q0, f, r);

  for (const Point& q : trajectory) {
    const Chart chart = Chart::transported(chart0, q);
    const CovarianceTensor s = covariance_at(q, f, r, chart);
    const double tr = trace_field(q, f, r);
    const Vec eig = operator_eigenvalues(chart, s);
    rep.distances.push_back(distance(q, q0));
    rep.traces.push_back(tr);
    rep.forms.push_back(s.sigma.matrix());
    rep.eigenvalues.push_back(eig);
    rep.trace_deviation.push_back(std::abs(tr - rep.reference_trace));
    rep.form_deviation.push_back((s.sigma.matrix() - form0).cwiseAbs().maxCoeff());
    rep.eigenvalue_deviation.push_back((eig - eig0).cwiseAbs().maxCoeff());
  }
  const std::size_t start = rep.traces.size() / 2;
  for (std::size_t k = start; k < rep.traces.size(); ++k) {
    rep.tail_trace_deviation = std::max(rep.tail_trace_deviation, rep.trace_deviation[k]);
    rep.tail_form_deviation = std::max(rep.tail_form_deviation, rep.form_deviation[k]);
    rep.tail_eigenvalue_deviation =
        std::max(rep.tail_eigenvalue_deviation, rep.eigenvalue_deviation[k]);
  }
  return rep;
}

}  // namespace covfield
