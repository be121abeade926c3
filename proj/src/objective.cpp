#include "covfield/error.hpp"
#include "covfield/kernels.hpp"
#include "covfield/recovery.hpp"

#include <cmath>
#include <limits>

namespace covfield {

namespace {

bool needs_inverse(InvariantKind kind) {
  return kind != InvariantKind::TrDif && kind != InvariantKind::TrDifSq;
}

bool has_derivatives(InvariantKind kind) {
  return kind == InvariantKind::TrDifSq || kind == InvariantKind::Lik ||
         kind == InvariantKind::TrSq;
}

Mat sym_inverse(const Mat& s) {
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  return es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

// tr(A B) without forming the product.
double trace_product(const Mat& a, const Mat& b) { return (a.array() * b.transpose().array()).sum(); }

}  // namespace

ObservationSet ObservationSet::from_points(std::vector<Point> points) {
  ObservationSet q;
  q.charts.reserve(points.size());
  for (const auto& p : points) q.charts.push_back(Chart::orthonormal(p));
  q.points = std::move(points);
  return q;
}

CovarianceSet forward_covariance_set(const Pmf& f, const ObservationSet& q, const Amplitude& r) {
  CovarianceSet out;
  out.observations = q;
  out.amplitude = r;
  out.tensors.reserve(q.points.size());
  for (int j = 0; j < q.size(); ++j) {
    out.tensors.push_back(covariance_at(q.points[j], f, r, q.charts[j]).sigma);
  }
  return out;
}

YMatrix build_y_matrix(const std::vector<Point>& support, const ObservationSet& q,
                       const Amplitude& r) {
  return YMatrix{y_matrix(support, q.points, r), r};
}

RankReport rank_diagnostic(const Mat& y, double rel_tol) {
  RankReport rep;
  rep.singular_values = singular_values(y);
  rep.rank = numerical_rank(y, rel_tol);
  rep.full_rank = rep.rank == y.cols();
  rep.smallest_retained = rep.rank > 0 ? rep.singular_values(rep.rank - 1) : 0.0;
  return rep;
}

RecoveryProblem::RecoveryProblem(const CovarianceSet& c, const std::vector<Point>& support,
                                 InvariantKind kind)
    : kind_(kind) {
  const ObservationSet& q = c.observations;
  const int k = static_cast<int>(support.size());
  if (k == 0 || q.size() != k) {
    throw Error(ErrorKind::Validation, "support and observation sets must have equal size k");
  }
  if (static_cast<int>(c.tensors.size()) != q.size()) {
    throw Error(ErrorKind::Validation, "one tensor per observation point is required");
  }
  n_ = support.front().manifold().dimension();
  y_.assign(k, std::vector<Mat>(k));
  traces_.resize(k, k);
  targets_.resize(k);
  for (int j = 0; j < k; ++j) {
    if (c.tensors[j].dim() != n_) {
      throw Error(ErrorKind::Validation, "tensor " + std::to_string(j) + " has the wrong dimension");
    }
    for (int i = 0; i < k; ++i) {
      y_[j][i] = weighted_z_tensor(q.points[j], support[i], q.charts[j], c.amplitude).matrix();
      traces_(j, i) = y_[j][i].trace();
    }
    c_.push_back(c.tensors[j].matrix());
    targets_(j) = c.tensors[j].trace();
  }
  if (needs_inverse(kind_)) {
    for (int j = 0; j < k; ++j) {
      if (!c.tensors[j].is_strictly_positive()) {
        throw Error(ErrorKind::NotSpd, "observed tensor C_" + std::to_string(j) +
                                           " is not strictly positive definite");
      }
      c_inv_.push_back(sym_inverse(c_[j]));
      c_inv_sqrt_.push_back(inverse_sqrt(c.tensors[j]));
    }
  }
}

RecoveryProblem RecoveryProblem::trace_only(Mat traces, Vec targets) {
  if (traces.rows() != traces.cols() || traces.rows() != targets.size() || traces.rows() == 0) {
    throw Error(ErrorKind::Validation, "trace-only problem needs a square Y and k targets");
  }
  RecoveryProblem p;
  p.kind_ = InvariantKind::TrDifSq;
  p.traces_ = std::move(traces);
  p.targets_ = std::move(targets);
  return p;
}

void RecoveryProblem::check_weights(const Vec& f) const {
  if (f.size() != k() || !f.allFinite()) {
    throw Error(ErrorKind::Validation, "weight vector has the wrong length or is not finite");
  }
}

Mat RecoveryProblem::sigma(const Vec& f, int j) const {
  check_weights(f);
  if (y_.empty()) throw Error(ErrorKind::Validation, "trace-only problem has no tensors");
  Mat s = Mat::Zero(n_, n_);
  for (int i = 0; i < k(); ++i) s += f(i) * y_[j][i];
  return s;
}

Mat RecoveryProblem::regularized_sigma(const Vec& f, int j, bool* ridged) const {
  Mat s = sigma(f, j);
  *ridged = false;
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  if (es.eigenvalues()(0) > 1e-12 * top) return s;
  const double tr = s.trace();
  if (!(tr > 0.0)) {
    throw Error(ErrorKind::NotSpd, "Sigma[f]_" + std::to_string(j) + " vanishes");
  }
  s += (1e-12 * tr / n_) * Mat::Identity(n_, n_);
  *ridged = true;
  return s;
}

RecoveryProblem::Evaluation RecoveryProblem::evaluate(const Vec& f) const {
  check_weights(f);
  Evaluation ev;
  const double kobs = static_cast<double>(observations());
  if (!needs_inverse(kind_)) {
    const Vec r = traces_ * f - targets_;
    ev.value = kind_ == InvariantKind::TrDifSq ? r.squaredNorm() / kobs : r.cwiseAbs().sum() / kobs;
    return ev;
  }
  double total = 0.0;
  for (int j = 0; j < observations(); ++j) {
    bool ridged = false;
    const Mat s = regularized_sigma(f, j, &ridged);
    if (ridged) ev.ridged.push_back(j);
    const Mat w = c_inv_sqrt_[j] * s * c_inv_sqrt_[j];
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (w + w.transpose()), Eigen::EigenvaluesOnly);
    total += invariant_from_spectrum(kind_, es.eigenvalues());
  }
  ev.value = std::isfinite(total) ? total / kobs : std::numeric_limits<double>::infinity();
  return ev;
}

Vec RecoveryProblem::gradient(const Vec& f) const {
  check_weights(f);
  if (!has_derivatives(kind_)) {
    throw Error(ErrorKind::Validation,
                "no analytic gradient for " + std::string(to_string(kind_)));
  }
  const double kobs = static_cast<double>(observations());
  if (kind_ == InvariantKind::TrDifSq) {
    return (2.0 / kobs) * traces_.transpose() * (traces_ * f - targets_);
  }
  Vec g = Vec::Zero(k());
  for (int j = 0; j < observations(); ++j) {
    bool ridged = false;
    const Mat s = regularized_sigma(f, j, &ridged);
    if (kind_ == InvariantKind::Lik) {
      // d/df_s [tr(S C^-1) - ln det(S C^-1)] = tr(Y_s C^-1) - tr(S^-1 Y_s).
      const Mat m = c_inv_[j] - sym_inverse(s);
      for (int i = 0; i < k(); ++i) g(i) += trace_product(y_[j][i], m);
    } else {
      // Whitened: B = C^-1/2 S C^-1/2, d tr((B - B^-1)^2) = 2 tr(dB (B - B^-3)).
      const Mat& w = c_inv_sqrt_[j];
      const Mat b = w * s * w;
      const Mat bi = sym_inverse(b);
      const Mat m = w * (b - bi * bi * bi) * w;
      for (int i = 0; i < k(); ++i) g(i) += 2.0 * trace_product(y_[j][i], m);
    }
  }
  return g / kobs;
}

Mat RecoveryProblem::hessian(const Vec& f) const {
  check_weights(f);
  if (!has_derivatives(kind_)) {
    throw Error(ErrorKind::Validation, "no analytic Hessian for " + std::string(to_string(kind_)));
  }
  const double kobs = static_cast<double>(observations());
  if (kind_ == InvariantKind::TrDifSq) return (2.0 / kobs) * traces_.transpose() * traces_;

  const int kk = k();
  Mat h = Mat::Zero(kk, kk);
  std::vector<Mat> a(kk);
  for (int j = 0; j < observations(); ++j) {
    bool ridged = false;
    const Mat s = regularized_sigma(f, j, &ridged);
    if (kind_ == InvariantKind::Lik) {
      // tr(S^-1 Y_s S^-1 Y_l)
      const Mat si = sym_inverse(s);
      for (int i = 0; i < kk; ++i) a[i] = si * y_[j][i];
      for (int s1 = 0; s1 < kk; ++s1) {
        for (int l = s1; l < kk; ++l) h(s1, l) += trace_product(a[s1], a[l]);
      }
    } else {
      const Mat& w = c_inv_sqrt_[j];
      const Mat bm = w * s * w;
      const Mat bi = sym_inverse(bm);
      const Mat bi2 = bi * bi;
      const Mat bi3 = bi2 * bi;
      for (int i = 0; i < kk; ++i) a[i] = w * y_[j][i] * w;
      for (int s1 = 0; s1 < kk; ++s1) {
        const Mat ys_bi = a[s1] * bi;
        const Mat ys_bi2 = a[s1] * bi2;
        const Mat ys_bi3 = a[s1] * bi3;
        for (int l = s1; l < kk; ++l) {
          const double v = trace_product(a[s1], a[l]) + trace_product(ys_bi, a[l] * bi3) +
                           trace_product(ys_bi2, a[l] * bi2) + trace_product(ys_bi3, a[l] * bi);
          h(s1, l) += 2.0 * v;
        }
      }
    }
  }
  const Mat full = h.selfadjointView<Eigen::Upper>();
  return full / kobs;
}

double objective(const Vec& f, const CovarianceSet& c, const std::vector<Point>& support,
                 InvariantKind kind) {
  return RecoveryProblem(c, support, kind).value(f);
}

Vec objective_gradient(const Vec& f, const CovarianceSet& c, const std::vector<Point>& support,
                       InvariantKind kind) {
  return RecoveryProblem(c, support, kind).gradient(f);
}

}  // namespace covfield
