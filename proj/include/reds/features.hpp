#pragma once

// Feature extractors composed on top of a generator. Each returns a new
// FeatureMap and forwards the analytic Jacobian when the input has one.

#include "reds/feature_map.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace reds {

enum class Polarity { Inside, Outside };

/// Pixel rectangle [x0, x1) x [y0, y1).
struct RegionMask {
  Index x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  Polarity polarity = Polarity::Inside;
};

enum class Band { Low, High };

struct BandSplit {
  double sigma = 1.0;
  Band band = Band::Low;
};

FeatureMap raw_feature(const FeatureMap& generator);

FeatureMap region_feature(const FeatureMap& generator, const RegionMask& mask);

/// Low band: truncated (+-ceil(3 sigma)) renormalized Gaussian blur with
/// reflect padding. High band: image - low band. Keeps the image shape.
FeatureMap band_feature(const FeatureMap& generator, const BandSplit& split);

/// tanh(E g(z)) with E drawn from embed_seed, entries N(0, 1/output_dim).
FeatureMap linear_embed_feature(const FeatureMap& generator, std::uint64_t embed_seed, Index embed_dim);
FeatureMap linear_embed_feature(const FeatureMap& generator, const Matrix& embedding);

/// w^T g(z) + b, with w ~ N(0, 1/output_dim) and b ~ N(0, 0.01) from weight_seed.
FeatureMap scalar_attribute_feature(const FeatureMap& generator, std::uint64_t weight_seed);
FeatureMap scalar_attribute_feature(const FeatureMap& generator, const Vector& weights, double bias);

FeatureMap concat_features(std::span<const FeatureMap> maps);

/// The blur behind band_feature, applied to one image (exposed for tests).
Vector gaussian_blur(const ImageShape& shape, const Vector& image, double sigma);

/// Row indices of the generator output selected by a region mask.
std::vector<Index> region_indices(const ImageShape& shape, const RegionMask& mask);

}  // namespace reds
