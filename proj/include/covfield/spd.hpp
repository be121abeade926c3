#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string_view>

namespace covfield {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Symmetric n x n matrix holding metric, covariance and design tensors.
///
/// Construction symmetrizes (M + M')/2 after rejecting inputs whose asymmetry
/// exceeds `asym_tol` (scaled by max(1, max|M_ij|)). Positive definiteness is
/// not enforced here; operations that need an inverse check it and raise
/// NotSpd. Single Z(q, p) terms are legitimately semidefinite.
class SpdMatrix {
 public:
  SpdMatrix() = default;
  explicit SpdMatrix(const Mat& m, double asym_tol = 1e-8);

  static SpdMatrix identity(int n);
  static SpdMatrix zero(int n);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Mat& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  double trace() const { return m_.trace(); }
  /// Ascending eigenvalues.
  Vec eigenvalues() const;
  double min_eigenvalue() const;
  /// All eigenvalues > rel * spectral norm.
  bool is_strictly_positive(double rel = 1e-12) const;

 private:
  Mat m_;
};

enum class InvariantKind { TrDif, TrDifSq, TrLn2, Lik, LnTr, LnPr, TrSq };

std::string_view to_string(InvariantKind kind);
/// Accepts the CLI spellings: trdif, trdifsq, trln2, lik, lntr, lnpr, trsq.
InvariantKind parse_invariant(std::string_view name);

/// TrDif and TrDifSq take the reference tensor Z; the rest depend only on the
/// spectrum of XY^{-1}.
bool uses_reference(InvariantKind kind);
/// Kinds whose recovery functional is convex on the simplex.
bool is_convex(InvariantKind kind);
/// Kinds with h(X, Y) = 0 iff X = Y.
bool has_unique_root(InvariantKind kind);

/// Throws NotSpd if some eigenvalue is <= 1e-12 * spectral norm.
void require_strict_spd(const SpdMatrix& m, std::string_view what);

/// Similarity-invariant function h(X, Y; Z). Z defaults to the identity
/// (the inverse metric in an orthonormal frame) and is ignored by kinds
/// that do not use it.
double invariant(InvariantKind kind, const SpdMatrix& x, const SpdMatrix& y,
                 const std::optional<SpdMatrix>& z = std::nullopt);

/// Invariant evaluated from the eigenvalues of XY^{-1}. Only valid for kinds
/// with uses_reference(kind) == false.
double invariant_from_spectrum(InvariantKind kind, const Vec& lambda);

/// Eigenvalues of Y^{-1/2} X Y^{-1/2} (similar to XY^{-1}), ascending.
Vec whitened_eigenvalues(const SpdMatrix& x, const SpdMatrix& y);

/// Logs of the eigenvalues of XY^{-1}, computed from the whitened matrix.
Vec whiten_log(const SpdMatrix& x, const SpdMatrix& y);

/// Y^{-1/2} for strictly SPD Y.
Mat inverse_sqrt(const SpdMatrix& y);

/// Singular values in descending order.
Vec singular_values(const Mat& m);

/// Number of singular values > rel_tol * largest.
int numerical_rank(const Mat& m, double rel_tol = 1e-9);

}  // namespace covfield
