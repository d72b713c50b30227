#pragma once

// Experiment configuration: a single versioned JSON document describing the
// generator, feature maps, traversal settings and seed set.

#include "reds/eval.hpp"
#include "reds/features.hpp"
#include "reds/generators.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace reds {

inline constexpr int kSchemaVersion = 1;

enum class FeatureType { Raw, Region, Band, LinearEmbed, Scalar, Concat };

struct FeatureSpec {
  std::string name;
  FeatureType type = FeatureType::Raw;
  double beta = 0.99;
  RegionMask region;
  BandSplit band;
  Index embed_dim = 0;
  std::uint64_t seed = 0;
  std::optional<Vector> weights;  ///< scalar: explicit functional
  double bias = 0.0;
  std::vector<FeatureSpec> parts;  ///< concat
};

struct SeedSpec {
  Index count = 1;
  std::uint64_t master_seed = 0;
  double latent_scale = 1.0;
};

struct EmitFlags {
  bool strips = false;
  bool plots = false;
};

struct ExperimentConfig {
  std::string name;
  GeneratorSpec generator;
  std::vector<FeatureSpec> fixed_features;
  FeatureSpec changing_feature;
  TraversalConfig traversal;
  SeedSpec seeds;
  std::optional<std::filesystem::path> output_dir;
  EmitFlags emit;
  /// Canonical JSON the config was parsed from (after overrides).
  nlohmann::json source;
};

/// Strict parse: unknown keys, wrong types and out-of-range values throw
/// InvalidConfig with the offending JSON path.
ExperimentConfig parse_config(const nlohmann::json& document);

/// Reads a file, applies `key=value` overrides to scalar fields (dotted
/// paths such as traversal.step), then parses.
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

void apply_override(nlohmann::json& document, const std::string& assignment);

FeatureMap build_feature(const FeatureMap& generator, const FeatureSpec& spec);

/// Seed point i: latent_scale * N(0, I) drawn from derive_seed(master, 0x5EED, i).
std::vector<Vector> seed_points(const SeedSpec& seeds, Index latent_dim);

/// Materialized generator, features and seeds.
struct Experiment {
  ExperimentConfig config;
  FeatureMap generator;
  Testbed testbed;
  std::vector<std::string> fixed_names;

  /// Name of the configured selector/method pairing, e.g. "reds-lin".
  std::string method_name() const;
  MethodSpec method() const;
};

Experiment materialize(const ExperimentConfig& config, unsigned workers = 1);

}  // namespace reds
