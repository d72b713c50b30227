#include "reds/traversal.hpp"

#include "reds/eval.hpp"

#include <Eigen/QR>

#include <cmath>
#include <sstream>

namespace reds {

const char* to_string(Method method) { return method == Method::Linear ? "linear" : "projection"; }

const char* to_string(Selector selector) {
  switch (selector) {
    case Selector::Reds: return "reds";
    case Selector::Random: return "random";
    case Selector::MaxDx: return "max-dx";
    case Selector::MinDy: return "min-dy";
    case Selector::GlobalLinear: return "global-linear";
  }
  return "unknown";
}

const char* to_string(TrajectoryStatus status) {
  return status == TrajectoryStatus::Complete ? "complete" : "truncated";
}

Method parse_method_kind(const std::string& text) {
  if (text == "linear") return Method::Linear;
  if (text == "projection") return Method::Projection;
  fail(ErrorKind::InvalidConfig, "unknown traversal method '" + text + "'");
}

Selector parse_selector(const std::string& text) {
  for (Selector s : {Selector::Reds, Selector::Random, Selector::MaxDx, Selector::MinDy, Selector::GlobalLinear}) {
    if (text == to_string(s)) return s;
  }
  fail(ErrorKind::InvalidConfig, "unknown direction selector '" + text + "'");
}

void TraversalConfig::validate(std::size_t fixed_feature_count) const {
  auto bad = [](const std::string& what) { fail(ErrorKind::InvalidConfig, what); };
  if (beta_f.size() != fixed_feature_count) {
    std::ostringstream msg;
    msg << "expected " << fixed_feature_count << " beta_f values, got " << beta_f.size();
    bad(msg.str());
  }
  for (double b : beta_f) {
    if (!(b > 0.0 && b <= 1.0)) bad("beta_f values must lie in (0, 1]");
  }
  if (!(beta_c > 0.0 && beta_c <= 1.0)) bad("beta_c must lie in (0, 1]");
  if (fd_eps && !(*fd_eps > 0.0 && std::isfinite(*fd_eps))) bad("fd_eps must be positive");
  if (!(step > 0.0 && std::isfinite(step))) bad("step must be positive");
  if (length < 1) bad("length must be >= 1");
  if (paths_per_seed < 1) bad("paths_per_seed must be >= 1");
  if (!(projection_floor > 0.0 && projection_floor < 1.0)) bad("projection_floor must lie in (0, 1)");
  if (geometry_stride < 1) bad("geometry_stride must be >= 1");
  if (global_samples < 0) bad("global_samples must be >= 0");
  if (method == Method::Projection && selector != Selector::Reds) {
    bad("projection traversal is defined for the reds selector only");
  }
}

double TraversalConfig::fd_step_at(const Vector& z) const { return fd_eps ? *fd_eps : default_fd_step(z); }

Vector random_unit_vector(Index dim, Rng& rng) {
  Vector g = rng.normal_vector(dim);
  double n = g.norm();
  while (n == 0.0) {
    g = rng.normal_vector(dim);
    n = g.norm();
  }
  return g / n;
}

Vector random_direction_in_span(const SubspaceBasis& basis, Rng& rng) {
  if (basis.empty()) fail(ErrorKind::EmptySubspace, "cannot draw a direction from an empty subspace");
  return basis.columns() * random_unit_vector(basis.rank(), rng);
}

RedsResult reds_at(const LocalGeometry& geometry, const TraversalConfig& config) {
  return compute_reds(geometry.fixed_grams, geometry.changing_gram, config.beta_f, config.beta_c,
                      config.rank_mode);
}

namespace {

[[noreturn]] void empty_reds(const RedsResult& r) {
  std::ostringstream msg;
  msg << "REDs basis is empty (" << to_string(r.status) << ", nullspace dim " << r.nullspace.rank()
      << "); lower beta_f to relax the fixed-feature constraints";
  fail(ErrorKind::EmptySubspace, msg.str());
}

}  // namespace

Vector select_direction(Selector selector, const LocalGeometry& geometry, const TraversalConfig& config,
                        Rng& rng) {
  const Index d = geometry.point.size();
  switch (selector) {
    case Selector::Reds: {
      const RedsResult r = reds_at(geometry, config);
      if (r.basis.empty()) empty_reds(r);
      return random_direction_in_span(r.basis, rng);
    }
    case Selector::Random:
      return random_unit_vector(d, rng);
    case Selector::MaxDx: {
      const NormalizedGram normalized = spectral_normalize(geometry.changing_gram);
      const SymmetricSpectrum spectrum = symmetric_eigen(normalized.gram);
      const Index rank =
          normalized.null_scale ? 0 : explained_variance_rank(spectrum.eigenvalues, config.beta_c, config.rank_mode);
      if (rank == 0) fail(ErrorKind::EmptySubspace, "changing feature is locally constant");
      return random_direction_in_span(SubspaceBasis(Matrix(spectrum.eigenvectors.leftCols(rank))), rng);
    }
    case Selector::MinDy: {
      GramMatrix total = GramMatrix::from_product(Matrix::Zero(d, d));
      for (const auto& g : geometry.fixed_grams) {
        const NormalizedGram normalized = spectral_normalize(g);
        if (!normalized.null_scale) total = total + normalized.gram;
      }
      const SymmetricSpectrum spectrum = symmetric_eigen(total);
      const RedsResult r = reds_at(geometry, config);
      const Index count = r.nullspace.rank();
      if (count == 0) empty_reds(r);
      return random_direction_in_span(SubspaceBasis(Matrix(spectrum.eigenvectors.rightCols(count))), rng);
    }
    case Selector::GlobalLinear:
      fail(ErrorKind::InvalidConfig, "global-linear directions are fitted once per run, not per point");
  }
  fail(ErrorKind::InvalidConfig, "unknown selector");
}

std::vector<Vector> linear_traverse(const Vector& z0, const Vector& direction, double step, Index length) {
  if (std::abs(direction.norm() - 1.0) > 1e-9) fail(ErrorKind::InvalidInput, "traversal direction must be unit length");
  std::vector<Vector> points;
  points.reserve(static_cast<std::size_t>(length + 1));
  for (Index k = 0; k <= length; ++k) points.push_back(z0 + (static_cast<double>(k) * step) * direction);
  return points;
}

Trajectory projection_traverse(const Vector& z0, std::span<const FeatureMap> fixed_maps,
                               const FeatureMap& changing_map, const TraversalConfig& config, Rng& rng) {
  Trajectory t;
  t.selector = Selector::Reds;
  t.method = Method::Projection;
  t.seed_point = z0;
  t.points.push_back(z0);

  auto reds_here = [&](const Vector& z) {
    return reds_at(local_geometry(fixed_maps, changing_map, z, config.fd_step_at(z)), config);
  };

  const RedsResult seed_reds = reds_here(z0);
  if (seed_reds.basis.empty()) {
    t.status = TrajectoryStatus::Truncated;
    t.note = std::string("REDs basis empty at seed: ") + to_string(seed_reds.status);
    return t;
  }
  Vector direction = random_direction_in_span(seed_reds.basis, rng);
  t.seed_direction = direction;

  Vector z = z0;
  for (Index i = 0; i < config.length; ++i) {
    if (i > 0 && i % config.geometry_stride == 0) {
      const RedsResult r = reds_here(z);
      if (r.basis.empty()) {
        t.status = TrajectoryStatus::Truncated;
        std::ostringstream note;
        note << "REDs basis empty at step " << i << ": " << to_string(r.status);
        t.note = note.str();
        break;
      }
      const Vector projected = r.basis.project(direction);
      const double norm = projected.norm();
      if (norm < config.projection_floor) {
        Vector fresh = random_direction_in_span(r.basis, rng);
        if (fresh.dot(direction) < 0.0) fresh = -fresh;
        direction = fresh;
        ++t.resamples;
      } else {
        direction = projected / norm;
      }
    }
    z = z + config.step * direction;
    t.points.push_back(z);
  }
  t.steps_taken = static_cast<Index>(t.points.size()) - 1;
  return t;
}

Trajectory run_trajectory(const Vector& z0, std::span<const FeatureMap> fixed_maps, const FeatureMap& changing_map,
                          const TraversalConfig& config, Rng& rng, const std::optional<Vector>& global_direction) {
  Trajectory t;
  if (config.method == Method::Projection) {
    if (config.selector != Selector::Reds) {
      fail(ErrorKind::InvalidConfig, "projection traversal is defined for the reds selector only");
    }
    t = projection_traverse(z0, fixed_maps, changing_map, config, rng);
  } else {
    t.selector = config.selector;
    t.method = Method::Linear;
    t.seed_point = z0;
    Vector direction;
    try {
      if (config.selector == Selector::GlobalLinear) {
        if (!global_direction) fail(ErrorKind::InvalidConfig, "global-linear selector needs a fitted direction");
        direction = *global_direction;
      } else if (config.selector == Selector::Random) {
        direction = random_unit_vector(z0.size(), rng);
      } else {
        const LocalGeometry geometry = local_geometry(fixed_maps, changing_map, z0, config.fd_step_at(z0));
        direction = select_direction(config.selector, geometry, config, rng);
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EmptySubspace) throw;
      t.status = TrajectoryStatus::Truncated;
      t.points = {z0};
      t.note = e.what();
      t.steps_taken = 0;
    }
    if (t.status == TrajectoryStatus::Complete) {
      t.seed_direction = direction;
      t.points = linear_traverse(z0, direction, config.step, config.length);
      t.steps_taken = config.length;
    }
  }
  t.records = step_distances(t.points, fixed_maps, changing_map);
  return t;
}

Vector orthogonalize_direction(const Vector& changing, std::span<const Vector> fixed) {
  std::vector<Vector> basis;
  for (const auto& f : fixed) {
    if (f.size() != changing.size()) fail(ErrorKind::InvalidInput, "attribute directions differ in dimension");
    Vector q = f;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) q -= b.dot(q) * b;
    const double n = q.norm();
    // A fixed direction already spanned by earlier ones adds no constraint.
    if (n > 1e-12 * std::max(1.0, f.norm())) basis.push_back(q / n);
  }
  Vector v = changing;
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& b : basis) v -= b.dot(v) * b;
  const double n = v.norm();
  if (n < 1e-8) {
    fail(ErrorKind::DegenerateAttribute,
         "changing attribute direction vanishes after orthogonalization against the fixed attributes");
  }
  return v / n;
}

GlobalLinearFit global_linear_fit(const FeatureMap& attribute, std::span<const FeatureMap> fixed_attributes,
                                  Index n_samples, Rng& rng, const LatentSampler& sampler) {
  const Index d = attribute.latent_dim();
  if (n_samples < 10 * d) {
    std::ostringstream msg;
    msg << "global linear fit needs at least 10 d = " << 10 * d << " samples, got " << n_samples;
    fail(ErrorKind::InvalidConfig, msg.str());
  }
  auto check_scalar = [d](const FeatureMap& m) {
    if (m.output_dim() != 1) fail(ErrorKind::InvalidConfig, "global-linear needs scalar attributes, '" + m.name() + "' is not");
    if (m.latent_dim() != d) fail(ErrorKind::InvalidConfig, "attribute latent dims differ");
  };
  check_scalar(attribute);
  for (const auto& f : fixed_attributes) check_scalar(f);

  const Index targets = 1 + static_cast<Index>(fixed_attributes.size());
  Matrix design(n_samples, d + 1);
  Matrix labels(n_samples, targets);
  for (Index i = 0; i < n_samples; ++i) {
    const Vector z = sampler ? sampler(rng) : rng.normal_vector(d);
    design.row(i).head(d) = z.transpose();
    design(i, d) = 1.0;
    labels(i, 0) = attribute(z)[0];
    for (std::size_t k = 0; k < fixed_attributes.size(); ++k) {
      labels(i, static_cast<Index>(k) + 1) = fixed_attributes[k](z)[0];
    }
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  if (qr.rank() < d + 1) fail(ErrorKind::InvalidConfig, "latent sample design is rank deficient");
  const Matrix coefficients = qr.solve(labels);

  GlobalLinearFit fit;
  fit.changing_weights = coefficients.col(0).head(d);
  for (Index k = 1; k < targets; ++k) fit.fixed_weights.push_back(coefficients.col(k).head(d));
  fit.direction = orthogonalize_direction(fit.changing_weights, fit.fixed_weights);
  return fit;
}

Vector global_linear_direction(const FeatureMap& attribute, std::span<const FeatureMap> fixed_attributes,
                               Index n_samples, Rng& rng, const LatentSampler& sampler) {
  return global_linear_fit(attribute, fixed_attributes, n_samples, rng, sampler).direction;
}

}  // namespace reds
