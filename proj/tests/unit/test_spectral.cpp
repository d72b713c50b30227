#include "oracles.hpp"
#include "reds/eval.hpp"
#include "reds/rng.hpp"
#include "reds/spectral.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace reds;

namespace {

Matrix diag(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return v.asDiagonal();
}

GramMatrix random_gram(Index rows, Index d, std::uint64_t seed) {
  Rng rng(seed);
  const Matrix j = rng.normal_matrix(rows, d);
  return GramMatrix(j.transpose() * j);
}

double abs_cos(const Vector& a, const Vector& b) { return std::abs(a.dot(b)) / (a.norm() * b.norm()); }

}  // namespace

TEST(GramMatrix, SymmetrizesInput) {
  Matrix a(2, 2);
  a << 2.0, 1.0, 0.0, 2.0;
  const GramMatrix g(a);
  EXPECT_DOUBLE_EQ(g.matrix()(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(g.matrix()(1, 0), 0.5);
}

TEST(GramMatrix, RejectsIndefiniteAndNonFinite) {
  EXPECT_THROW(GramMatrix(diag({1.0, -0.5})), Error);
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 0) = std::nan("");
  try {
    GramMatrix g(bad);
    FAIL() << "accepted NaN";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
}

TEST(SymmetricEigen, MatchesJacobiOracleAndInvariants) {
  const GramMatrix a = random_gram(5, 7, 21);
  const SymmetricSpectrum s = symmetric_eigen(a);
  const oracle::Eigen ref = oracle::jacobi_eigen(a.matrix());
  const double lmax = s.eigenvalues[0];
  for (Index i = 0; i < 7; ++i) {
    EXPECT_NEAR(s.eigenvalues[i], ref.values[i], 1e-10 * lmax);
    if (i > 0) {
      EXPECT_GE(s.eigenvalues[i - 1], s.eigenvalues[i]);
    }
    if (i < 5) {
      EXPECT_GT(abs_cos(s.eigenvectors.col(i), ref.vectors.col(i)), 1.0 - 1e-9);
    }
    Index arg = 0;
    s.eigenvectors.col(i).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(s.eigenvectors(arg, i), 0.0);
  }
  const Matrix vtv = s.eigenvectors.transpose() * s.eigenvectors;
  EXPECT_LE((vtv - Matrix::Identity(7, 7)).cwiseAbs().maxCoeff(), 1e-10);
  const Matrix rebuilt = s.eigenvectors * s.eigenvalues.asDiagonal() * s.eigenvectors.transpose();
  EXPECT_LE((rebuilt - a.matrix()).cwiseAbs().maxCoeff(), 1e-8 * lmax);
}

TEST(SpectralNormalize, DiagonalExample) {
  const NormalizedGram n = spectral_normalize(GramMatrix(diag({2.0, 1.0})));
  EXPECT_DOUBLE_EQ(n.scale, 2.0);
  EXPECT_FALSE(n.null_scale);
  EXPECT_LE((n.gram.matrix() - diag({1.0, 0.5})).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SpectralNormalize, IdentityIsFixedPoint) {
  const NormalizedGram n = spectral_normalize(GramMatrix(Matrix::Identity(4, 4)));
  EXPECT_LE((n.gram.matrix() - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SpectralNormalize, RandomGramHasUnitTopEigenvaluePerPowerIteration) {
  const NormalizedGram n = spectral_normalize(random_gram(3, 8, 7));
  EXPECT_NEAR(oracle::power_iteration_lambda_max(n.gram.matrix()), 1.0, 1e-10);
}

TEST(SpectralNormalize, FlagsNullScale) {
  const NormalizedGram n = spectral_normalize(GramMatrix(Matrix::Zero(3, 3)));
  EXPECT_TRUE(n.null_scale);
  EXPECT_EQ(n.gram.matrix(), Matrix::Zero(3, 3));
}

TEST(ExplainedVarianceRank, Examples) {
  EXPECT_EQ(explained_variance_rank(Vector::Unit(4, 0), 0.99), 1);
  EXPECT_EQ(explained_variance_rank(Vector::Ones(4), 0.99), 4);
  EXPECT_EQ(explained_variance_rank(Vector::Ones(4), 0.75), 3);
  Vector u(3);
  u << 3.0, 2.0, 1.0;
  // Squared shares 9/14, 13/14, 1.
  EXPECT_EQ(explained_variance_rank(u, 0.6), 1);
  EXPECT_EQ(explained_variance_rank(u, 0.92), 2);
  EXPECT_EQ(explained_variance_rank(u, 0.95), 3);
  EXPECT_EQ(explained_variance_rank(Vector::Zero(3), 0.5), 0);
}

TEST(ExplainedVarianceRank, LiteralModeUsesUnsquaredPartialSums) {
  // Partial sums 0.5, 0.75, 0.875 against 0.99 * (0.25 + 0.0625 + 0.015625).
  Vector u(3);
  u << 0.5, 0.25, 0.125;
  EXPECT_EQ(explained_variance_rank(u, 0.99, RankMode::Literal), 1);
  EXPECT_EQ(explained_variance_rank(u, 0.99, RankMode::Squared), 3);
}

TEST(ExplainedVarianceRank, RejectsBetaOutsideUnitInterval) {
  for (double beta : {0.0, -0.1, 1.5}) {
    try {
      explained_variance_rank(Vector::Ones(2), beta);
      FAIL() << beta;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
    }
  }
  EXPECT_EQ(explained_variance_rank(Vector::Ones(2), 1.0), 2);
}

TEST(NullspaceBasis, DiagonalRankOne) {
  const SubspaceBasis n = nullspace_basis(symmetric_eigen(GramMatrix(diag({1.0, 0.0, 0.0}))), 1);
  ASSERT_EQ(n.rank(), 2);
  EXPECT_LE(n.columns().row(0).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(NullspaceBasis, FullRankGivesEmpty) {
  const SubspaceBasis n = nullspace_basis(symmetric_eigen(GramMatrix(Matrix::Identity(3, 3))), 3);
  EXPECT_TRUE(n.empty());
  EXPECT_EQ(n.ambient_dim(), 3);
  EXPECT_THROW(nullspace_basis(symmetric_eigen(GramMatrix(Matrix::Identity(3, 3))), 4), Error);
}

TEST(NullspaceBasis, AnnihilatesJacobian) {
  Rng rng(31);
  const Matrix j = rng.normal_matrix(2, 6);
  const SubspaceBasis n = nullspace_basis(symmetric_eigen(GramMatrix(j.transpose() * j)), 2);
  ASSERT_EQ(n.rank(), 4);
  const double jn = j.norm();
  for (Index c = 0; c < n.rank(); ++c) EXPECT_LE((j * n.columns().col(c)).norm(), 1e-8 * jn);
}

TEST(IntersectNullspaces, CoordinateAxes) {
  const std::vector<SubspaceBasis> ranges{SubspaceBasis(Matrix(Vector::Unit(4, 0))),
                                          SubspaceBasis(Matrix(Vector::Unit(4, 1)))};
  const SubspaceBasis n = intersect_nullspaces(ranges, 4);
  ASSERT_EQ(n.rank(), 2);
  EXPECT_LE(n.columns().topRows(2).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(IntersectNullspaces, EmptyListIsIdentity) {
  const SubspaceBasis n = intersect_nullspaces({}, 5);
  ASSERT_EQ(n.rank(), 5);
  EXPECT_LE((n.columns().transpose() * n.columns() - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(IntersectNullspaces, RandomConstraintsMatchIndependentRank) {
  Rng rng(5);
  const Matrix b1 = rng.normal_matrix(2, 16);
  const Matrix b2 = rng.normal_matrix(3, 16);
  std::vector<SubspaceBasis> ranges;
  for (const Matrix* b : {&b1, &b2}) {
    const SymmetricSpectrum s = symmetric_eigen(GramMatrix(b->transpose() * *b));
    ranges.emplace_back(Matrix(s.eigenvectors.leftCols(b->rows())));
  }
  const SubspaceBasis n = intersect_nullspaces(ranges, 16);
  Matrix stacked(5, 16);
  stacked << b1, b2;
  EXPECT_EQ(n.rank(), 16 - oracle::numerical_rank(stacked));
  EXPECT_EQ(n.rank(), 11);
  for (const auto& r : ranges) EXPECT_LE((r.columns().transpose() * n.columns()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(IntersectNullspaces, RejectsMismatchedDims) {
  const std::vector<SubspaceBasis> ranges{SubspaceBasis(Matrix(Vector::Unit(4, 0))),
                                          SubspaceBasis(Matrix(Vector::Unit(3, 1)))};
  EXPECT_THROW(intersect_nullspaces(ranges, 4), Error);
}

TEST(ComputeReds, DiagonalHandAnalysis) {
  const std::vector<GramMatrix> fixed{GramMatrix(diag({1, 0, 0, 0}))};
  const std::vector<double> beta_f{0.99};
  const RedsResult r = compute_reds(fixed, GramMatrix(diag({0, 3, 2, 1})), beta_f, 0.999);
  ASSERT_EQ(r.status, RedsStatus::Ok);
  EXPECT_EQ(r.fixed_ranks, std::vector<Index>{1});
  EXPECT_EQ(r.nullspace.rank(), 3);
  EXPECT_EQ(r.changing_rank, 3);
  ASSERT_EQ(r.projected_eigenvalues.size(), 3);
  EXPECT_NEAR(r.projected_eigenvalues[0], 1.0, 1e-12);
  EXPECT_NEAR(r.projected_eigenvalues[1], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.projected_eigenvalues[2], 1.0 / 3.0, 1e-12);
  for (Index c = 0; c < 3; ++c) EXPECT_NEAR(r.basis.columns()(c + 1, c), 1.0, 1e-12);
}

TEST(ComputeReds, LinearConstraintIsAnnihilatedAndTopIsOptimal) {
  Rng rng(77);
  const Matrix b = rng.normal_matrix(2, 8);
  const std::vector<GramMatrix> fixed{GramMatrix(b.transpose() * b)};
  const std::vector<double> beta_f{0.99};
  const Matrix jc = rng.normal_matrix(8, 8);
  // c(z) = z (isotropic A_c) and a random anisotropic changing map.
  const std::vector<GramMatrix> changing{GramMatrix(Matrix::Identity(8, 8)), GramMatrix(jc.transpose() * jc)};
  for (std::size_t k = 0; k < changing.size(); ++k) {
    const RedsResult r = compute_reds(fixed, changing[k], beta_f, 0.999);
    ASSERT_EQ(r.status, RedsStatus::Ok);
    EXPECT_EQ(r.nullspace.rank(), 6);
    for (Index c = 0; c < r.basis.rank(); ++c) EXPECT_LE((b * r.basis.columns().col(c)).norm(), 1e-8 * b.norm());
    const NormalizedGram n = spectral_normalize(changing[k]);
    Rng sampler(78);
    const OracleReport o = direction_oracle(r, n.gram, 100000, sampler);
    EXPECT_LE(o.relative_gap, 1e-8);
    if (k == 1) {
      const oracle::DenseReds ref = oracle::dense_reds({fixed[0].matrix()}, changing[k].matrix(), beta_f, 0.999);
      EXPECT_GT(abs_cos(ref.directions.col(0), r.basis.columns().col(0)), 1.0 - 1e-6);
    }
  }
}

TEST(ComputeReds, MatchesDenseReimplementationForSmallDims) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Rng rng(seed);
    const Index d = 3 + static_cast<Index>(seed % 6);
    const Index n_fixed = 1 + static_cast<Index>(seed % 2);
    std::vector<GramMatrix> fixed;
    std::vector<Matrix> fixed_dense;
    std::vector<double> beta_f;
    for (Index i = 0; i < n_fixed; ++i) {
      const Matrix j = rng.normal_matrix(1, d);
      fixed.push_back(GramMatrix::from_product(j.transpose() * j));
      fixed_dense.push_back(j.transpose() * j);
      beta_f.push_back(0.99);
    }
    // Distinct, well separated changing spectrum keeps columns identifiable.
    const oracle::Eigen q = oracle::jacobi_eigen(rng.normal_matrix(d, d) + rng.normal_matrix(d, d).transpose());
    Vector spectrum(d);
    for (Index i = 0; i < d; ++i) spectrum[i] = std::pow(0.5, static_cast<double>(i));
    const Matrix ac = q.vectors * spectrum.asDiagonal() * q.vectors.transpose();
    const RedsResult r = compute_reds(fixed, GramMatrix(ac), beta_f, 0.999);
    const oracle::DenseReds ref = oracle::dense_reds(fixed_dense, ac, beta_f, 0.999);
    ASSERT_EQ(r.nullspace.rank(), ref.nullspace.cols()) << "seed " << seed;
    ASSERT_EQ(r.basis.rank(), ref.directions.cols()) << "seed " << seed;
    for (Index c = 0; c < r.basis.rank(); ++c) {
      EXPECT_GT(abs_cos(r.basis.columns().col(c), ref.directions.col(c)), 1.0 - 1e-6) << "seed " << seed;
      EXPECT_NEAR(r.projected_eigenvalues[c], ref.projected[c], 1e-10);
    }
  }
}

TEST(ComputeReds, PropertiesOnRandomProblems) {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    Rng rng(seed);
    const Index d = 10;
    std::vector<GramMatrix> fixed{random_gram(3, d, seed), random_gram(2, d, seed + 1000)};
    const std::vector<double> beta_f{0.99, 0.99};
    const Matrix jc = rng.normal_matrix(6, d);
    const GramMatrix ac(jc.transpose() * jc);
    const RedsResult r = compute_reds(fixed, ac, beta_f, 0.999);
    ASSERT_EQ(r.status, RedsStatus::Ok);
    const Matrix& R = r.basis.columns();
    EXPECT_EQ(r.basis.rank(), r.changing_rank);
    EXPECT_EQ(r.projected_eigenvalues.size(), r.changing_rank);
    EXPECT_LE((R.transpose() * R - Matrix::Identity(R.cols(), R.cols())).cwiseAbs().maxCoeff(), 1e-10);
    for (const auto& range : r.range_bases) EXPECT_LE((range.columns().transpose() * R).cwiseAbs().maxCoeff(), 1e-9);
    const Matrix an = spectral_normalize(ac).gram.matrix();
    for (Index c = 0; c + 1 < R.cols(); ++c) {
      EXPECT_GE(R.col(c).dot(an * R.col(c)), R.col(c + 1).dot(an * R.col(c + 1)) - 1e-10);
    }
    // Scale invariance of the span.
    const RedsResult scaled = compute_reds(fixed, 37.5 * ac, beta_f, 0.999);
    ASSERT_EQ(scaled.basis.rank(), r.basis.rank());
    EXPECT_LE(oracle::max_span_residual(scaled.basis.columns(), R), 1e-8);
  }
}

TEST(ComputeReds, StrictlyDefiniteConstraintLeavesEmptyNullspace) {
  const std::vector<GramMatrix> fixed{random_gram(8, 5, 3)};
  const std::vector<double> beta_f{1.0};
  const RedsResult r = compute_reds(fixed, GramMatrix(Matrix::Identity(5, 5)), beta_f, 0.999);
  EXPECT_EQ(r.status, RedsStatus::EmptyNullspace);
  EXPECT_TRUE(r.basis.empty());
  EXPECT_TRUE(r.nullspace.empty());
}

TEST(ComputeReds, ZeroFixedGramImposesNoConstraint) {
  const std::vector<GramMatrix> fixed{GramMatrix(Matrix::Zero(4, 4))};
  const std::vector<double> beta_f{0.99};
  const RedsResult r = compute_reds(fixed, GramMatrix(diag({4, 3, 2, 1})), beta_f, 0.999);
  EXPECT_EQ(r.nullspace.rank(), 4);
  EXPECT_EQ(r.fixed_ranks, std::vector<Index>{0});
}

TEST(ComputeReds, NoFixedFeaturesAndMismatches) {
  const RedsResult r = compute_reds({}, GramMatrix(diag({4, 1})), {}, 0.999);
  EXPECT_EQ(r.nullspace.rank(), 2);
  const std::vector<GramMatrix> fixed{GramMatrix(Matrix::Identity(3, 3))};
  const std::vector<double> beta_f{0.99};
  EXPECT_THROW(compute_reds(fixed, GramMatrix(Matrix::Identity(2, 2)), beta_f, 0.999), Error);
  EXPECT_THROW(compute_reds(fixed, GramMatrix(Matrix::Identity(3, 3)), {}, 0.999), Error);
}

TEST(ComputeReds, ChangingFlatOnNullspaceReportsNoChange) {
  const std::vector<GramMatrix> fixed{GramMatrix(diag({1, 0}))};
  const std::vector<double> beta_f{0.99};
  const RedsResult r = compute_reds(fixed, GramMatrix(diag({1, 0})), beta_f, 0.999);
  EXPECT_EQ(r.status, RedsStatus::NoChange);
}

TEST(GeneralizedRayleigh, Examples) {
  const Vector v1 = generalized_rayleigh_reference(GramMatrix(Matrix::Identity(2, 2)), GramMatrix(diag({3, 1})));
  EXPECT_NEAR(std::abs(v1[0]), 1.0, 1e-12);
  const Vector v2 = generalized_rayleigh_reference(GramMatrix(diag({4, 1})), GramMatrix(diag({4, 2})));
  EXPECT_NEAR(std::abs(v2[1]), 1.0, 1e-12);
}

TEST(GeneralizedRayleigh, BeatsRandomSearch) {
  Rng rng(6);
  const Matrix jf = rng.normal_matrix(9, 6);
  const Matrix jc = rng.normal_matrix(9, 6);
  const GramMatrix af(jf.transpose() * jf), ac(jc.transpose() * jc);
  const Vector v = generalized_rayleigh_reference(af, ac);
  EXPECT_NEAR(v.norm(), 1.0, 1e-12);
  auto quotient = [&](const Vector& x) { return x.dot(ac.matrix() * x) / x.dot(af.matrix() * x); };
  const double best = quotient(v);
  for (int i = 0; i < 100000; ++i) EXPECT_LE(quotient(rng.normal_vector(6)), best * (1.0 + 1e-8));
}

TEST(GeneralizedRayleigh, SingularConstraintThrows) {
  try {
    generalized_rayleigh_reference(GramMatrix(diag({1, 0})), GramMatrix(diag({1, 1})));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularMatrix);
  }
}
