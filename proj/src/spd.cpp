#include "covfield/spd.hpp"

#include "covfield/error.hpp"

#include <cmath>
#include <string>

namespace covfield {

SpdMatrix::SpdMatrix(const Mat& m, double asym_tol) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::Validation, "matrix is not square");
  }
  if (!m.allFinite()) {
    throw Error(ErrorKind::Validation, "matrix has non-finite entries");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > asym_tol * scale) {
    throw Error(ErrorKind::Validation,
                "matrix asymmetry " + std::to_string(asym) + " exceeds tolerance");
  }
  m_ = 0.5 * (m + m.transpose());
}

SpdMatrix SpdMatrix::identity(int n) { return SpdMatrix(Mat::Identity(n, n)); }

SpdMatrix SpdMatrix::zero(int n) { return SpdMatrix(Mat::Zero(n, n)); }

Vec SpdMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Mat> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double SpdMatrix::min_eigenvalue() const { return eigenvalues().minCoeff(); }

bool SpdMatrix::is_strictly_positive(double rel) const {
  if (m_.size() == 0) return false;
  const Vec ev = eigenvalues();
  const double norm = ev.cwiseAbs().maxCoeff();
  return ev.minCoeff() > rel * norm && norm > 0.0;
}

std::string_view to_string(InvariantKind kind) {
  switch (kind) {
    case InvariantKind::TrDif: return "trdif";
    case InvariantKind::TrDifSq: return "trdifsq";
    case InvariantKind::TrLn2: return "trln2";
    case InvariantKind::Lik: return "lik";
    case InvariantKind::LnTr: return "lntr";
    case InvariantKind::LnPr: return "lnpr";
    case InvariantKind::TrSq: return "trsq";
  }
  return "?";
}

InvariantKind parse_invariant(std::string_view name) {
  for (auto k : {InvariantKind::TrDif, InvariantKind::TrDifSq, InvariantKind::TrLn2,
                 InvariantKind::Lik, InvariantKind::LnTr, InvariantKind::LnPr,
                 InvariantKind::TrSq}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorKind::Validation, "unknown invariant '" + std::string(name) + "'");
}

bool uses_reference(InvariantKind kind) {
  return kind == InvariantKind::TrDif || kind == InvariantKind::TrDifSq;
}

bool is_convex(InvariantKind kind) {
  return kind == InvariantKind::TrDifSq || kind == InvariantKind::Lik ||
         kind == InvariantKind::TrSq;
}

bool has_unique_root(InvariantKind kind) {
  return kind == InvariantKind::TrLn2 || kind == InvariantKind::Lik ||
         kind == InvariantKind::TrSq;
}

void require_strict_spd(const SpdMatrix& m, std::string_view what) {
  if (!m.is_strictly_positive(1e-12)) {
    throw Error(ErrorKind::NotSpd, std::string(what) + " is not strictly positive definite");
  }
}

Mat inverse_sqrt(const SpdMatrix& y) {
  require_strict_spd(y, "reference matrix");
  Eigen::SelfAdjointEigenSolver<Mat> es(y.matrix());
  const Vec d = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

Vec whitened_eigenvalues(const SpdMatrix& x, const SpdMatrix& y) {
  if (x.dim() != y.dim()) throw Error(ErrorKind::Validation, "dimension mismatch");
  require_strict_spd(x, "X");
  const Mat w = inverse_sqrt(y);
  const Mat whitened = w * x.matrix() * w;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (whitened + whitened.transpose()),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

Vec whiten_log(const SpdMatrix& x, const SpdMatrix& y) {
  return whitened_eigenvalues(x, y).array().log().matrix();
}

double invariant_from_spectrum(InvariantKind kind, const Vec& lambda) {
  switch (kind) {
    case InvariantKind::TrLn2:
      return std::sqrt(lambda.array().log().square().sum());
    case InvariantKind::Lik: {
      double s = 0.0;
      for (double l : lambda) s += (l - 1.0) - std::log(l);
      return s;
    }
    case InvariantKind::TrSq:
      return (lambda.array() - lambda.array().inverse()).square().sum();
    case InvariantKind::LnTr: {
      const double trsq = (lambda.array() - lambda.array().inverse()).square().sum();
      if (!(trsq > 1e-24)) {
        throw Error(ErrorKind::DomainError, "lntr is undefined when X = Y");
      }
      return std::log(trsq);
    }
    case InvariantKind::LnPr:
      return std::log(lambda.sum() * lambda.cwiseInverse().sum());
    case InvariantKind::TrDif:
    case InvariantKind::TrDifSq:
      break;
  }
  throw Error(ErrorKind::Validation, "invariant kind needs a reference tensor");
}

double invariant(InvariantKind kind, const SpdMatrix& x, const SpdMatrix& y,
                 const std::optional<SpdMatrix>& z) {
  if (x.dim() != y.dim()) throw Error(ErrorKind::Validation, "dimension mismatch");
  if (uses_reference(kind)) {
    require_strict_spd(x, "X");
    require_strict_spd(y, "Y");
    const int n = x.dim();
    const SpdMatrix ref = z ? *z : SpdMatrix::identity(n);
    if (ref.dim() != n) throw Error(ErrorKind::Validation, "reference dimension mismatch");
    require_strict_spd(ref, "Z");
    const double t = ref.matrix().ldlt().solve(x.matrix() - y.matrix()).trace();
    return kind == InvariantKind::TrDif ? std::abs(t) : t * t;
  }
  return invariant_from_spectrum(kind, whitened_eigenvalues(x, y));
}

Vec singular_values(const Mat& m) {
  if (m.size() == 0) return Vec();
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues();
}

int numerical_rank(const Mat& m, double rel_tol) {
  const Vec s = singular_values(m);
  if (s.size() == 0 || !(s(0) > 0.0)) return 0;
  int rank = 0;
  for (double v : s) {
    if (v > rel_tol * s(0)) ++rank;
  }
  return rank;
}

}  // namespace covfield
