#include "reds/eval.hpp"
#include "reds/features.hpp"
#include "reds/generators.hpp"
#include "reds/traversal.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

using namespace reds;

namespace {

Matrix diag(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return v.asDiagonal();
}

FeatureMap linear_map(const Matrix& m) {
  return FeatureMap("linear", m.cols(), m.rows(), [m](const Vector& z) { return Vector(m * z); },
                    [m](const Vector&) { return m; });
}

FeatureMap sphere(Index d) {
  GeneratorSpec s;
  s.kind = GeneratorKind::Quadratic;
  s.latent_dim = d;
  return build_generator(s);
}

TraversalConfig base_config(Method method = Method::Linear) {
  TraversalConfig c;
  c.beta_f = {0.99};
  c.beta_c = 0.999;
  c.step = 0.1;
  c.length = 10;
  c.method = method;
  c.rng_seed = 1;
  return c;
}

LocalGeometry geometry_of(std::vector<Matrix> fixed, const Matrix& changing) {
  LocalGeometry g;
  g.point = Vector::Zero(changing.rows());
  for (const auto& f : fixed) g.fixed_grams.emplace_back(f);
  g.changing_gram = GramMatrix(changing);
  return g;
}

}  // namespace

TEST(RandomDirectionInSpan, RankOneSpan) {
  const SubspaceBasis b(Matrix(Vector::Unit(4, 0)));
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    const Vector v = random_direction_in_span(b, rng);
    EXPECT_NEAR(std::abs(v[0]), 1.0, 1e-15);
    EXPECT_EQ(v.tail(3).norm(), 0.0);
  }
}

TEST(RandomDirectionInSpan, UnitInSpanAndCentered) {
  Rng rng(2);
  const Eigen::HouseholderQR<Matrix> qr(rng.normal_matrix(7, 3));
  const SubspaceBasis b(Matrix(qr.householderQ() * Matrix::Identity(7, 3)));
  Vector mean = Vector::Zero(7);
  for (int i = 0; i < 10000; ++i) {
    const Vector v = random_direction_in_span(b, rng);
    ASSERT_NEAR(v.norm(), 1.0, 1e-12);
    ASSERT_LE((b.project(v) - v).norm(), 1e-10);
    mean += v;
  }
  EXPECT_LE((mean / 10000.0).norm(), 0.05);
}

TEST(RandomDirectionInSpan, EmptyBasisThrows) {
  Rng rng(3);
  try {
    random_direction_in_span(SubspaceBasis(4), rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptySubspace);
  }
}

TEST(SelectDirection, MaxDxPicksDominantEigenvector) {
  TraversalConfig c = base_config();
  c.beta_c = 0.9;
  const LocalGeometry g = geometry_of({diag({0, 0, 1})}, diag({5, 1, 0}));
  Rng rng(4);
  const Vector v = select_direction(Selector::MaxDx, g, c, rng);
  EXPECT_NEAR(std::abs(v[0]), 1.0, 1e-12);
}

TEST(SelectDirection, MinDyUsesTrailingFixedEigenvectors) {
  const TraversalConfig c = base_config();
  const LocalGeometry g = geometry_of({diag({1, 0, 0})}, diag({1, 1, 1}));
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const Vector v = select_direction(Selector::MinDy, g, c, rng);
    EXPECT_LE(std::abs(v[0]), 1e-12);
    EXPECT_NEAR(v.norm(), 1.0, 1e-12);
  }
}

TEST(SelectDirection, RedsAvoidsLinearConstraintWhileMaxDxDoesNot) {
  Rng setup(6);
  const Matrix b = setup.normal_matrix(4, 16);
  const std::vector<FeatureMap> fixed{linear_map(b)};
  const FeatureMap changing = linear_map(setup.normal_matrix(16, 16));
  TraversalConfig c = base_config();
  int max_dx_large = 0;
  for (int seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed(6, static_cast<std::uint64_t>(seed)));
    const Vector z = rng.normal_vector(16);
    const LocalGeometry g = local_geometry(fixed, changing, z, 1e-3);
    const Vector reds = select_direction(Selector::Reds, g, c, rng);
    EXPECT_LE((b * reds).norm(), 1e-8 * b.norm());
    if ((b * select_direction(Selector::MaxDx, g, c, rng)).norm() > 0.01 * b.norm()) ++max_dx_large;
  }
  EXPECT_GE(max_dx_large, 99);
}

TEST(SelectDirection, RandomIsUnit) {
  const LocalGeometry g = geometry_of({diag({1, 0, 0})}, diag({1, 1, 1}));
  Rng rng(7);
  EXPECT_NEAR(select_direction(Selector::Random, g, base_config(), rng).norm(), 1.0, 1e-12);
  EXPECT_THROW(select_direction(Selector::GlobalLinear, g, base_config(), rng), Error);
}

TEST(SelectDirection, EmptyRedsBasisMentionsBeta) {
  TraversalConfig c = base_config();
  c.beta_f = {1.0};
  const LocalGeometry g = geometry_of({Matrix::Identity(3, 3)}, Matrix::Identity(3, 3));
  Rng rng(8);
  try {
    select_direction(Selector::Reds, g, c, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptySubspace);
    EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos);
  }
}

TEST(LinearTraverse, Examples) {
  const auto pts = linear_traverse(Vector::Zero(3), Vector::Unit(3, 0), 1.0, 5);
  ASSERT_EQ(pts.size(), 6u);
  for (std::size_t k = 0; k < pts.size(); ++k) EXPECT_EQ(pts[k], static_cast<double>(k) * Vector::Unit(3, 0));
  const auto rooms = linear_traverse(Vector::Ones(4), Vector::Unit(4, 2), 0.25, 10);
  EXPECT_NEAR((rooms.back() - rooms.front()).norm(), 2.5, 1e-15);
}

TEST(ProjectionTraverse, FlatConstraintMatchesLinear) {
  Rng setup(9);
  const Matrix b = setup.normal_matrix(4, 16);
  const std::vector<FeatureMap> fixed{linear_map(b)};
  const FeatureMap changing = linear_map(setup.normal_matrix(16, 16));
  for (int seed = 0; seed < 5; ++seed) {
    const Vector z0 = setup.normal_vector(16);
    Rng r1(derive_seed(9, static_cast<std::uint64_t>(seed)));
    Rng r2(derive_seed(9, static_cast<std::uint64_t>(seed)));
    const Trajectory lin = run_trajectory(z0, fixed, changing, base_config(Method::Linear), r1);
    const Trajectory proj = run_trajectory(z0, fixed, changing, base_config(Method::Projection), r2);
    ASSERT_EQ(lin.points.size(), proj.points.size());
    for (std::size_t i = 0; i < lin.points.size(); ++i) EXPECT_LE((lin.points[i] - proj.points[i]).norm(), 1e-8);
  }
}

TEST(ProjectionTraverse, SphereDriftIsSmallerThanLinear) {
  const Index d = 8;
  const std::vector<FeatureMap> fixed{sphere(d)};
  const FeatureMap changing = raw_feature(linear_map(Matrix::Identity(d, d)));
  TraversalConfig c = base_config();
  c.step = 0.05;
  c.length = 20;
  c.fd_eps = 1e-4;
  Rng setup(10);
  for (int seed = 0; seed < 5; ++seed) {
    const Vector z0 = setup.normal_vector(d);
    c.method = Method::Linear;
    Rng r1(derive_seed(10, static_cast<std::uint64_t>(seed)));
    const Trajectory lin = run_trajectory(z0, fixed, changing, c, r1);
    c.method = Method::Projection;
    Rng r2(derive_seed(10, static_cast<std::uint64_t>(seed)));
    const Trajectory proj = run_trajectory(z0, fixed, changing, c, r2);
    const double r0 = z0.squaredNorm();
    const double lin_drift = std::abs(lin.points.back().squaredNorm() - r0);
    const double proj_drift = std::abs(proj.points.back().squaredNorm() - r0);
    EXPECT_NEAR(lin_drift, 1.0, 1e-6);  // (L s)^2 for a tangent start
    EXPECT_LE(proj_drift, 0.2 * lin_drift);
    for (std::size_t i = 1; i < proj.points.size(); ++i) {
      EXPECT_NEAR((proj.points[i] - proj.points[i - 1]).norm(), c.step, 1e-9);
      if (i >= 2) {
        const Vector a = proj.points[i] - proj.points[i - 1];
        const Vector b = proj.points[i - 1] - proj.points[i - 2];
        EXPECT_GE(a.dot(b), 0.0);
      }
    }
  }
}

TEST(RunTrajectory, DeterministicAndWellFormed) {
  GeneratorSpec s;
  s.kind = GeneratorKind::SmoothMlp;
  s.latent_dim = 8;
  s.seed = 3;
  s.widths = {8, 16, 16};
  const FeatureMap g = build_generator(s);
  const std::vector<FeatureMap> fixed{linear_embed_feature(g, 7, 4)};
  const FeatureMap changing = raw_feature(g);
  TraversalConfig c = base_config(Method::Projection);
  c.length = 6;
  Rng setup(11);
  const Vector z0 = setup.normal_vector(8);
  Rng r1(5), r2(5);
  const Trajectory a = run_trajectory(z0, fixed, changing, c, r1);
  const Trajectory b = run_trajectory(z0, fixed, changing, c, r2);
  ASSERT_EQ(a.points.size(), 7u);
  EXPECT_EQ(a.records.size(), 6u);
  EXPECT_EQ(a.steps_taken, 6);
  EXPECT_EQ(a.status, TrajectoryStatus::Complete);
  for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(a.points[i], b.points[i]);
  EXPECT_NEAR(a.seed_direction.norm(), 1.0, 1e-12);
}

TEST(RunTrajectory, EmptyNullspaceAtSeedIsTruncated) {
  const std::vector<FeatureMap> fixed{linear_map(Matrix::Identity(3, 3))};
  const FeatureMap changing = linear_map(Matrix::Identity(3, 3));
  TraversalConfig c = base_config();
  c.beta_f = {1.0};
  Rng rng(1);
  const Trajectory t = run_trajectory(Vector::Ones(3), fixed, changing, c, rng);
  EXPECT_EQ(t.status, TrajectoryStatus::Truncated);
  EXPECT_EQ(t.steps_taken, 0);
  EXPECT_EQ(t.points.size(), 1u);
  EXPECT_FALSE(t.note.empty());
}

TEST(RunTrajectory, FirstOrderPreservationOnMlp) {
  GeneratorSpec s;
  s.kind = GeneratorKind::SmoothMlp;
  s.latent_dim = 16;
  s.seed = 3;
  s.widths = {16, 32, 32};
  s.latent_decay = 0.7;
  const FeatureMap g = build_generator(s);
  const std::vector<FeatureMap> fixed{linear_embed_feature(g, 7, 12)};
  const FeatureMap changing = raw_feature(g);
  TraversalConfig c = base_config();
  c.beta_f = {1.0 - 1e-12};
  Rng rng(12);
  const double h = 1e-4;
  for (int trial = 0; trial < 10; ++trial) {
    const Vector z = rng.normal_vector(16);
    const LocalGeometry geo = local_geometry(fixed, changing, z, 1e-4);
    const Vector v = select_direction(Selector::Reds, geo, c, rng);
    const Vector m = select_direction(Selector::MaxDx, geo, c, rng);
    auto dd = [&](const Vector& dir) { return ((fixed[0](z + h * dir) - fixed[0](z - h * dir)) / (2 * h)).norm(); };
    EXPECT_LE(dd(v), 1e-3 * dd(m));
  }
}

TEST(TraversalConfig, ValidationCatchesRangeErrors) {
  TraversalConfig c = base_config();
  EXPECT_NO_THROW(c.validate(1));
  EXPECT_THROW(c.validate(2), Error);
  c.step = 0;
  EXPECT_THROW(c.validate(1), Error);
  c = base_config();
  c.projection_floor = 1.0;
  EXPECT_THROW(c.validate(1), Error);
  c = base_config();
  c.beta_c = 0.0;
  EXPECT_THROW(c.validate(1), Error);
  c = base_config(Method::Projection);
  c.selector = Selector::Random;
  EXPECT_THROW(c.validate(1), Error);
  c = base_config();
  c.length = 0;
  EXPECT_THROW(c.validate(1), Error);
}

TEST(GlobalLinear, GramSchmidtExample) {
  Vector changing(3);
  changing << 1.0, 1.0, 0.0;
  changing /= std::sqrt(2.0);
  const std::vector<Vector> fixed{Vector::Unit(3, 0)};
  const Vector v = orthogonalize_direction(changing, fixed);
  EXPECT_LE((v - Vector::Unit(3, 1)).norm(), 1e-15);
  const std::vector<Vector> parallel{changing};
  try {
    orthogonalize_direction(changing, parallel);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateAttribute);
  }
}

TEST(GlobalLinear, NoiselessRecoveryIsExact) {
  const Index d = 10;
  Rng setup(13);
  const Vector w = setup.normal_vector(d);
  const FeatureMap attribute = scalar_attribute_feature(linear_map(Matrix::Identity(d, d)), w, 0.4);
  Rng rng(14);
  const Vector v = global_linear_direction(attribute, {}, 200, rng);
  EXPECT_GE(v.dot(w.normalized()), 1.0 - 1e-8);
}

TEST(GlobalLinear, NoisyRecoveryAndOrthogonality) {
  const Index d = 16;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng setup(derive_seed(15, seed));
    const Vector w = setup.normal_vector(d);
    const Vector u = setup.normal_vector(d);
    const std::uint64_t noise_seed = derive_seed(16, seed);
    // Label noise is a deterministic function of z so the map stays pure.
    const FeatureMap noisy("noisy", d, 1, [w, noise_seed](const Vector& z) {
      std::uint64_t h = noise_seed;
      for (Index i = 0; i < z.size(); ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &z[i], sizeof bits);
        h = derive_seed(h, bits);
      }
      Rng r(h);
      return Vector::Constant(1, w.dot(z) + 0.1 * r.normal());
    });
    const std::vector<FeatureMap> fixed{
        scalar_attribute_feature(linear_map(Matrix::Identity(d, d)), u, 0.0)};
    Rng rng(derive_seed(17, seed));
    const GlobalLinearFit fit = global_linear_fit(noisy, fixed, 2000, rng);
    EXPECT_GE(fit.changing_weights.normalized().dot(w.normalized()), 0.98);
    EXPECT_LE(std::abs(fit.direction.dot(fit.fixed_weights[0])), 1e-10 * fit.fixed_weights[0].norm());
    EXPECT_NEAR(fit.direction.norm(), 1.0, 1e-12);
  }
}

TEST(GlobalLinear, RejectsTooFewSamplesAndVectorAttributes) {
  const FeatureMap attribute = scalar_attribute_feature(linear_map(Matrix::Identity(8, 8)), Vector::Ones(8), 0.0);
  Rng rng(18);
  EXPECT_THROW(global_linear_direction(attribute, {}, 50, rng), Error);
  EXPECT_THROW(global_linear_direction(linear_map(Matrix::Identity(8, 8)), {}, 200, rng), Error);
}

TEST(MonotoneProgression, HoldsOnStandardTestbed) {
  GeneratorSpec s;
  s.kind = GeneratorKind::SmoothMlp;
  s.latent_dim = 16;
  s.seed = 3;
  s.widths = {16, 32, 32};
  s.latent_decay = 0.7;
  const FeatureMap g = build_generator(s);
  const std::vector<FeatureMap> fixed{linear_embed_feature(g, 7, 12)};
  const FeatureMap changing = raw_feature(g);
  TraversalConfig c = base_config();
  c.length = 5;
  Index satisfied = 0, total = 0;
  Rng setup(19);
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(19, static_cast<std::uint64_t>(seed)));
    const Trajectory t = run_trajectory(setup.normal_vector(16), fixed, changing, c, rng);
    const MonotoneCheck m = monotone_progression(t.points, changing);
    satisfied += m.satisfied;
    total += m.total;
  }
  EXPECT_GE(static_cast<double>(satisfied) / static_cast<double>(total), 0.9);
}
