#pragma once

// Direction selection (REDs and baselines) and latent path generation.

#include "reds/local_geometry.hpp"
#include "reds/rng.hpp"
#include "reds/spectral.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace reds {

enum class Method { Linear, Projection };
enum class Selector { Reds, Random, MaxDx, MinDy, GlobalLinear };

const char* to_string(Method method);
const char* to_string(Selector selector);
Method parse_method_kind(const std::string& text);
Selector parse_selector(const std::string& text);

struct TraversalConfig {
  std::vector<double> beta_f;  ///< one per fixed feature
  double beta_c = 0.999;
  std::optional<double> fd_eps;  ///< nullopt: default_fd_step at each point
  double step = 0.1;
  Index length = 5;
  Index paths_per_seed = 5;
  Method method = Method::Linear;
  Selector selector = Selector::Reds;
  std::uint64_t rng_seed = 0;
  double projection_floor = 0.1;
  /// Projection recomputes the REDs every `geometry_stride` steps.
  Index geometry_stride = 1;
  RankMode rank_mode = RankMode::Squared;
  /// Latent samples for the global-linear baseline; 0 means max(2000, 10 d).
  Index global_samples = 0;

  /// Throws InvalidConfig on any range violation.
  void validate(std::size_t fixed_feature_count) const;
  double fd_step_at(const Vector& z) const;
};

struct StepRecord {
  Index step = 0;
  std::vector<double> sq_dy;     ///< |f_j(z_i) - f_j(z_0)|^2 per fixed map
  std::vector<double> cos_dy;    ///< 1 - cos(f_j(z_i), f_j(z_0)) per fixed map
  double sq_dx = 0.0;            ///< |c(z_i) - c(z_0)|^2
  double consecutive_dx = 0.0;   ///< |c(z_i) - c(z_{i-1})|
};

enum class TrajectoryStatus { Complete, Truncated };
const char* to_string(TrajectoryStatus status);

struct Trajectory {
  Index seed_index = 0;
  Index path_index = 0;
  Selector selector = Selector::Reds;
  Method method = Method::Linear;
  Vector seed_point;
  Vector seed_direction;  ///< empty when truncated at the seed
  std::vector<Vector> points;
  std::vector<StepRecord> records;  ///< steps 1..points.size()-1
  TrajectoryStatus status = TrajectoryStatus::Complete;
  /// Number of steps taken; equals config.length unless truncated.
  Index steps_taken = 0;
  /// Degenerate-projection fallbacks taken during a projection traversal.
  Index resamples = 0;
  std::string note;
};

Vector random_unit_vector(Index dim, Rng& rng);

/// B g / |B g| with g ~ N(0, I_rank). Throws EmptySubspace on a rank-0 basis.
Vector random_direction_in_span(const SubspaceBasis& basis, Rng& rng);

RedsResult reds_at(const LocalGeometry& geometry, const TraversalConfig& config);

/// Unit direction for every selector except GlobalLinear.
Vector select_direction(Selector selector, const LocalGeometry& geometry, const TraversalConfig& config,
                        Rng& rng);

/// z_k = z0 + k s v for k = 0..length.
std::vector<Vector> linear_traverse(const Vector& z0, const Vector& direction, double step, Index length);

Trajectory projection_traverse(const Vector& z0, std::span<const FeatureMap> fixed_maps,
                               const FeatureMap& changing_map, const TraversalConfig& config, Rng& rng);

/// Runs one trajectory for config.selector / config.method and fills its
/// step records. `global_direction` is required for the GlobalLinear selector.
Trajectory run_trajectory(const Vector& z0, std::span<const FeatureMap> fixed_maps,
                          const FeatureMap& changing_map, const TraversalConfig& config, Rng& rng,
                          const std::optional<Vector>& global_direction = std::nullopt);

/// Gram-Schmidt of `changing` against the fixed directions (themselves
/// orthonormalized in list order), then unit-normalized. Throws
/// DegenerateAttribute when less than 1e-8 remains.
Vector orthogonalize_direction(const Vector& changing, std::span<const Vector> fixed);

/// Ordinary least squares weights (intercept fitted, not returned) of each attribute on
/// standard-normal latents.
struct GlobalLinearFit {
  Vector direction;
  Vector changing_weights;
  std::vector<Vector> fixed_weights;
};

using LatentSampler = std::function<Vector(Rng&)>;

GlobalLinearFit global_linear_fit(const FeatureMap& attribute, std::span<const FeatureMap> fixed_attributes,
                                  Index n_samples, Rng& rng, const LatentSampler& sampler = {});

Vector global_linear_direction(const FeatureMap& attribute, std::span<const FeatureMap> fixed_attributes,
                               Index n_samples, Rng& rng, const LatentSampler& sampler = {});

}  // namespace reds
