#pragma once

// Dense symmetric eigen-analysis and the constrained Rayleigh-quotient solver
// that produces local edit directions (REDs).

#include "reds/types.hpp"

#include <span>
#include <vector>

namespace reds {

/// Symmetric PSD quadratic form on the latent space. Construction symmetrizes
/// the input as (A + A^T) / 2.
class GramMatrix {
 public:
  GramMatrix() = default;

  /// Validates finiteness and positive semidefiniteness
  /// (lambda_min >= -1e-10 * lambda_max).
  explicit GramMatrix(const Matrix& entries);

  /// Skips the PSD check; for matrices that are J^T J by construction.
  static GramMatrix from_product(const Matrix& entries);

  Index dim() const { return entries_.rows(); }
  const Matrix& matrix() const { return entries_; }

  friend GramMatrix operator*(double alpha, const GramMatrix& g);
  friend GramMatrix operator+(const GramMatrix& a, const GramMatrix& b);

 private:
  struct Trusted {};
  GramMatrix(const Matrix& entries, Trusted);

  Matrix entries_;
};

/// Eigenvalues sorted descending; column i of `eigenvectors` pairs with
/// eigenvalue i and has its largest-magnitude entry positive.
struct SymmetricSpectrum {
  Vector eigenvalues;
  Matrix eigenvectors;
};

/// Orthonormal columns spanning a subspace of R^ambient_dim. Rank 0 is legal.
class SubspaceBasis {
 public:
  explicit SubspaceBasis(Index ambient_dim = 0);
  /// Columns are trusted to be orthonormal.
  explicit SubspaceBasis(Matrix columns);

  static SubspaceBasis identity(Index dim);

  Index ambient_dim() const { return columns_.rows(); }
  Index rank() const { return columns_.cols(); }
  bool empty() const { return columns_.cols() == 0; }
  const Matrix& columns() const { return columns_; }

  /// Orthogonal projection onto the span.
  Vector project(const Vector& v) const;

 private:
  Matrix columns_;
};

enum class RankMode { Squared, Literal };

enum class RedsStatus {
  Ok,
  /// The fixed features leave no free direction (soft-constraint regime);
  /// callers may relax beta_f.
  EmptyNullspace,
  /// The changing feature is flat on the nullspace.
  NoChange,
};

const char* to_string(RankMode mode);
const char* to_string(RedsStatus status);

struct RedsResult {
  RedsStatus status = RedsStatus::Ok;
  /// R, ordered by decreasing projected eigenvalue.
  SubspaceBasis basis;
  /// The leading changing_rank eigenvalues of N^T A_c N (after normalization).
  Vector projected_eigenvalues;
  /// Full descending spectrum of N^T A_c N.
  Vector nullspace_spectrum;
  std::vector<Index> fixed_ranks;
  Index changing_rank = 0;
  /// N, the intersection of the truncated fixed-feature nullspaces.
  SubspaceBasis nullspace;
  /// Kept leading eigenvectors per fixed Gram.
  std::vector<SubspaceBasis> range_bases;
};

struct NormalizedGram {
  GramMatrix gram;
  double scale = 0.0;  ///< lambda_max of the input
  bool null_scale = false;
};

/// Makes the largest-magnitude entry of each column positive.
void canonicalize_signs(Matrix& columns);

SymmetricSpectrum symmetric_eigen(const GramMatrix& a);

/// A / lambda_max(A); returns A untouched with null_scale set when
/// lambda_max <= 1e-14 * dim.
NormalizedGram spectral_normalize(const GramMatrix& a);

/// Smallest r >= 1 whose leading mass reaches beta of the total squared mass.
/// Literal mode sums unsquared eigenvalues on the left-hand side. Returns 0
/// when every eigenvalue is zero and the full length when the threshold is
/// never reached.
Index explained_variance_rank(const Vector& eigenvalues, double beta,
                              RankMode mode = RankMode::Squared);

/// Trailing d - rank eigenvectors.
SubspaceBasis nullspace_basis(const SymmetricSpectrum& spectrum, Index rank);

/// Orthogonal complement of the union of the given range bases.
SubspaceBasis intersect_nullspaces(std::span<const SubspaceBasis> range_bases,
                                   Index ambient_dim);

RedsResult compute_reds(std::span<const GramMatrix> fixed_grams, const GramMatrix& changing_gram,
                        std::span<const double> beta_f, double beta_c,
                        RankMode mode = RankMode::Squared);

/// Principal eigenvector of A_f^{-1} A_c. Cross-check path only; throws
/// SingularMatrix when A_f is not strictly positive definite.
Vector generalized_rayleigh_reference(const GramMatrix& a_f, const GramMatrix& a_c);

}  // namespace reds
