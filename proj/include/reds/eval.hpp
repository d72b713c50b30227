#pragma once

// Per-step distance bookkeeping, aggregation across trajectories, power-law
// fits and the brute-force optimality oracle.

#include "reds/traversal.hpp"

#include <span>
#include <string>
#include <vector>

namespace reds {

/// Floor applied before taking logs of distances that are exactly zero.
inline constexpr double kLogFloor = 1e-30;

std::vector<StepRecord> step_distances(std::span<const Vector> points, std::span<const FeatureMap> fixed_maps,
                                       const FeatureMap& changing_map);

/// Fraction of step triples with |x_i - x_{i+1}| < |x_i - x_{i+2}|.
struct MonotoneCheck {
  Index satisfied = 0;
  Index total = 0;
  double fraction() const { return total == 0 ? 1.0 : static_cast<double>(satisfied) / static_cast<double>(total); }
};
MonotoneCheck monotone_progression(std::span<const Vector> points, const FeatureMap& changing_map);

struct StepAggregate {
  Index step = 0;
  Index count = 0;
  std::vector<double> mean_sq_dy;  ///< per fixed feature
  double mean_sq_dx = 0.0;
  /// log10 of the means above, floored at kLogFloor.
  std::vector<double> log10_mean_sq_dy;
  double log10_mean_sq_dx = 0.0;
  /// Mean over trajectories of log10 of each value (floored).
  std::vector<double> mean_log10_sq_dy;
  double mean_log10_sq_dx = 0.0;
  /// Number of exact zeros that were floored.
  Index floored = 0;

  /// Sum of mean_sq_dy over fixed features.
  double total_mean_sq_dy() const;
};

/// Per-step means over the trajectories that reached each step.
std::vector<StepAggregate> aggregate_steps(std::span<const Trajectory> trajectories);

/// Count-weighted combination of two aggregations of disjoint trajectory sets.
std::vector<StepAggregate> merge_aggregates(std::span<const StepAggregate> a, std::span<const StepAggregate> b);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  Index floored = 0;
};

/// Least-squares slope of log(values) against log(arc_lengths). Zero values
/// are floored at kLogFloor and counted; needs at least three points.
LogLogFit loglog_slope(std::span<const double> arc_lengths, std::span<const double> values);

struct OracleReport {
  double red_value = 0.0;
  double best_sampled = 0.0;
  Index samples = 0;
  double relative_gap = 0.0;  ///< (best_sampled - red_value) / max(red_value, 1e-15)
};

/// Samples unit vectors in the nullspace and compares the best v^T A v to
/// the value at `red_direction`. Requires n_samples >= 1e4.
OracleReport direction_oracle(const SubspaceBasis& nullspace, const GramMatrix& changing_gram,
                              const Vector& red_direction, Index n_samples, Rng& rng);

/// Top-RED overload: uses result.nullspace and the first RED column.
OracleReport direction_oracle(const RedsResult& result, const GramMatrix& changing_gram, Index n_samples,
                              Rng& rng);

// ---------------------------------------------------------------------------
// Method comparison

/// A named selector/method pairing, e.g. "reds-lin" or "max-dx".
struct MethodSpec {
  std::string name;
  Selector selector = Selector::Reds;
  Method method = Method::Linear;
};

/// Accepts reds-lin, reds-proj, random, max-dx, min-dy, global-linear.
MethodSpec parse_method(const std::string& name);
std::vector<MethodSpec> default_methods();

struct Testbed {
  std::vector<FeatureMap> fixed_maps;
  FeatureMap changing_map;
  TraversalConfig config;  ///< selector/method are overridden per method
  std::vector<Vector> seed_points;
  unsigned workers = 1;
};

/// Runs seeds x paths trajectories in (seed, path) order. Each trajectory
/// draws from the stream derive_seed(config.rng_seed, seed, path).
std::vector<Trajectory> run_trajectories(const Testbed& testbed, const MethodSpec& method);

/// The global-linear direction for `method`, or nullopt for local selectors.
std::optional<Vector> fit_global_direction(const Testbed& testbed, const MethodSpec& method);

/// One trajectory of run_trajectories, computed on its own.
Trajectory run_one(const Testbed& testbed, const MethodSpec& method, std::size_t seed_index,
                   std::size_t path_index, const std::optional<Vector>& global_direction);

struct MethodRun {
  MethodSpec method;
  std::vector<Trajectory> trajectories;
  std::vector<StepAggregate> aggregates;
};

struct MethodSummary {
  std::string method;
  Index step = 0;
  double log10_dy = 0.0;  ///< log10 of the summed mean squared fixed drift
  double log10_dx = 0.0;  ///< log10 of the mean squared changing gain
  Index count = 0;
};

struct PairwiseDominance {
  std::string a;
  std::string b;
  double delta_log10_dy = 0.0;  ///< a - b; negative favours a
  double delta_log10_dx = 0.0;  ///< a - b; positive favours a
  bool a_dominates = false;     ///< lower drift and at least equal gain
};

struct ComparisonReport {
  std::vector<MethodRun> runs;
  std::vector<MethodSummary> summaries;  ///< at the last step every method reached
  std::vector<PairwiseDominance> pairwise;
};

ComparisonReport compare_methods(const Testbed& testbed, std::span<const MethodSpec> methods);

}  // namespace reds
