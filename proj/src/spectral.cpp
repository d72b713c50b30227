#include "reds/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace reds {

namespace {

constexpr double kPsdTolerance = 1e-10;
constexpr double kNullScale = 1e-14;
constexpr double kIntersectionThreshold = 1e-10;

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void require_square_finite(const Matrix& m) {
  if (m.rows() != m.cols()) {
    std::ostringstream msg;
    msg << "Gram matrix must be square, got " << m.rows() << "x" << m.cols();
    fail(ErrorKind::InvalidInput, msg.str());
  }
  if (!m.allFinite()) fail(ErrorKind::InvalidInput, "Gram matrix has non-finite entries");
}

}  // namespace

GramMatrix::GramMatrix(const Matrix& entries) {
  require_square_finite(entries);
  entries_ = symmetrized(entries);
  if (entries_.size() == 0) return;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(entries_, Eigen::EigenvaluesOnly);
  const double lo = solver.eigenvalues().minCoeff();
  const double hi = solver.eigenvalues().maxCoeff();
  if (lo < -kPsdTolerance * std::max(hi, 0.0) && lo < -1e-300) {
    std::ostringstream msg;
    msg << "Gram matrix is not positive semidefinite (lambda_min=" << lo
        << ", lambda_max=" << hi << ")";
    fail(ErrorKind::InvalidInput, msg.str());
  }
}

GramMatrix::GramMatrix(const Matrix& entries, Trusted) : entries_(symmetrized(entries)) {}

GramMatrix GramMatrix::from_product(const Matrix& entries) {
  require_square_finite(entries);
  return GramMatrix(entries, Trusted{});
}

GramMatrix operator*(double alpha, const GramMatrix& g) {
  return GramMatrix(alpha * g.entries_, GramMatrix::Trusted{});
}

GramMatrix operator+(const GramMatrix& a, const GramMatrix& b) {
  if (a.dim() != b.dim()) fail(ErrorKind::InvalidInput, "Gram dimension mismatch in sum");
  return GramMatrix(a.entries_ + b.entries_, GramMatrix::Trusted{});
}

SubspaceBasis::SubspaceBasis(Index ambient_dim) : columns_(ambient_dim, 0) {}

SubspaceBasis::SubspaceBasis(Matrix columns) : columns_(std::move(columns)) {}

SubspaceBasis SubspaceBasis::identity(Index dim) {
  return SubspaceBasis(Matrix::Identity(dim, dim));
}

Vector SubspaceBasis::project(const Vector& v) const {
  if (empty()) return Vector::Zero(v.size());
  return columns_ * (columns_.transpose() * v);
}

const char* to_string(RankMode mode) {
  return mode == RankMode::Squared ? "squared" : "literal";
}

const char* to_string(RedsStatus status) {
  switch (status) {
    case RedsStatus::Ok: return "ok";
    case RedsStatus::EmptyNullspace: return "empty-nullspace";
    case RedsStatus::NoChange: return "no-change";
  }
  return "unknown";
}

void canonicalize_signs(Matrix& columns) {
  for (Index j = 0; j < columns.cols(); ++j) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < columns.rows(); ++i) {
      // Ties resolve to the first index; the small slack keeps that stable
      // under last-bit differences between backends.
      const double mag = std::abs(columns(i, j));
      if (mag > best * (1.0 + 1e-12)) {
        best = mag;
        arg = i;
      }
    }
    if (columns.rows() > 0 && columns(arg, j) < 0.0) columns.col(j) *= -1.0;
  }
}

SymmetricSpectrum symmetric_eigen(const GramMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix());
  if (solver.info() != Eigen::Success) fail(ErrorKind::InvalidInput, "eigensolver failed");
  // Eigen returns ascending order.
  SymmetricSpectrum out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  canonicalize_signs(out.eigenvectors);
  return out;
}

NormalizedGram spectral_normalize(const GramMatrix& a) {
  if (!a.matrix().allFinite()) fail(ErrorKind::InvalidInput, "Gram matrix has non-finite entries");
  NormalizedGram out;
  if (a.dim() == 0) {
    out.gram = a;
    out.null_scale = true;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix(), Eigen::EigenvaluesOnly);
  const double lambda_max = solver.eigenvalues().maxCoeff();
  out.scale = lambda_max;
  if (lambda_max <= kNullScale * static_cast<double>(a.dim())) {
    out.gram = a;
    out.null_scale = true;
    return out;
  }
  out.gram = (1.0 / lambda_max) * a;
  return out;
}

Index explained_variance_rank(const Vector& eigenvalues, double beta, RankMode mode) {
  if (!(beta > 0.0 && beta <= 1.0)) {
    std::ostringstream msg;
    msg << "beta must lie in (0, 1], got " << beta;
    fail(ErrorKind::InvalidConfig, msg.str());
  }
  const Vector u = eigenvalues.cwiseMax(0.0);
  const double total = u.squaredNorm();
  if (total == 0.0) return 0;
  const double target = beta * total;
  double cumulative = 0.0;
  for (Index i = 0; i < u.size(); ++i) {
    cumulative += mode == RankMode::Squared ? u[i] * u[i] : u[i];
    if (cumulative >= target) return i + 1;
  }
  return u.size();
}

SubspaceBasis nullspace_basis(const SymmetricSpectrum& spectrum, Index rank) {
  const Index d = spectrum.eigenvectors.cols();
  if (rank < 0 || rank > d) {
    std::ostringstream msg;
    msg << "nullspace rank " << rank << " outside [0, " << d << "]";
    fail(ErrorKind::InvalidInput, msg.str());
  }
  return SubspaceBasis(Matrix(spectrum.eigenvectors.rightCols(d - rank)));
}

SubspaceBasis intersect_nullspaces(std::span<const SubspaceBasis> range_bases,
                                   Index ambient_dim) {
  Index rows = 0;
  for (const auto& b : range_bases) {
    if (b.ambient_dim() != ambient_dim) {
      std::ostringstream msg;
      msg << "range basis has ambient dim " << b.ambient_dim() << ", expected " << ambient_dim;
      fail(ErrorKind::InvalidInput, msg.str());
    }
    rows += b.rank();
  }
  if (rows == 0) return SubspaceBasis::identity(ambient_dim);

  Matrix stack(rows, ambient_dim);
  Index offset = 0;
  for (const auto& b : range_bases) {
    stack.middleRows(offset, b.rank()) = b.columns().transpose();
    offset += b.rank();
  }
  Eigen::JacobiSVD<Matrix> svd(stack, Eigen::ComputeFullV);
  const auto& sigma = svd.singularValues();
  const double cutoff = kIntersectionThreshold * sigma[0];
  Index rank = 0;
  while (rank < sigma.size() && sigma[rank] > cutoff) ++rank;
  Matrix null = svd.matrixV().rightCols(ambient_dim - rank);
  canonicalize_signs(null);
  return SubspaceBasis(std::move(null));
}

RedsResult compute_reds(std::span<const GramMatrix> fixed_grams, const GramMatrix& changing_gram,
                        std::span<const double> beta_f, double beta_c, RankMode mode) {
  const Index d = changing_gram.dim();
  if (fixed_grams.size() != beta_f.size()) {
    std::ostringstream msg;
    msg << fixed_grams.size() << " fixed Grams but " << beta_f.size() << " beta_f values";
    fail(ErrorKind::InvalidInput, msg.str());
  }
  for (const auto& g : fixed_grams) {
    if (g.dim() != d) fail(ErrorKind::InvalidInput, "fixed Gram dimension differs from changing Gram");
  }

  RedsResult result;
  result.basis = SubspaceBasis(d);
  result.nullspace = SubspaceBasis(d);

  std::vector<SymmetricSpectrum> spectra;
  spectra.reserve(fixed_grams.size());
  for (std::size_t i = 0; i < fixed_grams.size(); ++i) {
    const NormalizedGram normalized = spectral_normalize(fixed_grams[i]);
    SymmetricSpectrum spectrum = symmetric_eigen(normalized.gram);
    // A locally constant feature constrains nothing.
    const Index rank = normalized.null_scale
                           ? 0
                           : explained_variance_rank(spectrum.eigenvalues, beta_f[i], RankMode::Squared);
    result.fixed_ranks.push_back(rank);
    result.range_bases.emplace_back(Matrix(spectrum.eigenvectors.leftCols(rank)));
    spectra.push_back(std::move(spectrum));
  }
  // Validated here as well so a bad beta_c is reported even on an empty nullspace.
  if (!(beta_c > 0.0 && beta_c <= 1.0)) explained_variance_rank(Vector::Ones(1), beta_c, mode);

  if (spectra.size() == 1) {
    result.nullspace = nullspace_basis(spectra.front(), result.fixed_ranks.front());
  } else {
    result.nullspace = intersect_nullspaces(result.range_bases, d);
  }
  if (result.nullspace.empty()) {
    result.status = RedsStatus::EmptyNullspace;
    return result;
  }

  const NormalizedGram changing = spectral_normalize(changing_gram);
  const Matrix& n = result.nullspace.columns();
  const GramMatrix projected = GramMatrix::from_product(n.transpose() * changing.gram.matrix() * n);
  const SymmetricSpectrum inner = symmetric_eigen(projected);
  result.nullspace_spectrum = inner.eigenvalues;
  result.changing_rank =
      changing.null_scale ? 0 : explained_variance_rank(inner.eigenvalues, beta_c, mode);
  if (result.changing_rank == 0) {
    result.status = RedsStatus::NoChange;
    return result;
  }
  Matrix directions = n * inner.eigenvectors.leftCols(result.changing_rank);
  canonicalize_signs(directions);
  result.basis = SubspaceBasis(std::move(directions));
  result.projected_eigenvalues = inner.eigenvalues.head(result.changing_rank).cwiseMax(0.0);
  return result;
}

Vector generalized_rayleigh_reference(const GramMatrix& a_f, const GramMatrix& a_c) {
  if (a_f.dim() != a_c.dim()) fail(ErrorKind::InvalidInput, "Gram dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Matrix> check(a_f.matrix(), Eigen::EigenvaluesOnly);
  const double lo = check.eigenvalues().minCoeff();
  const double hi = check.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || lo <= 1e-10 * hi) {
    fail(ErrorKind::SingularMatrix,
         "A_f is singular; use compute_reds for the nullspace-restricted problem");
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(a_c.matrix(), a_f.matrix());
  if (solver.info() != Eigen::Success) fail(ErrorKind::SingularMatrix, "generalized eigensolver failed");
  const Index last = a_f.dim() - 1;
  Matrix v = solver.eigenvectors().col(last).normalized();
  canonicalize_signs(v);
  return v.col(0);
}

}  // namespace reds
