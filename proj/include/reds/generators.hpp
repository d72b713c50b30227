#pragma once

// Deterministic toy generators. Every parameter is drawn from the portable
// Rng, so a GeneratorSpec fully determines its function.

#include "reds/feature_map.hpp"
#include "reds/image.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace reds {

enum class GeneratorKind { Linear, Quadratic, SmoothMlp, BlobImage };
enum class QuadraticForm { Sphere, Random };

const char* to_string(GeneratorKind kind);

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::Linear;
  Index latent_dim = 0;
  std::uint64_t seed = 0;

  // linear: explicit matrix, or a seeded output_dim x latent_dim Gaussian
  // matrix scaled by 1/sqrt(latent_dim) when absent.
  std::optional<Matrix> matrix;
  Index output_dim = 0;

  // quadratic: g_k(z) = z^T Q_k z; Sphere is the single form Q = I.
  QuadraticForm form = QuadraticForm::Sphere;

  // smooth-mlp: layer widths including input (= latent_dim) and output.
  // Hidden layers use tanh; the output layer is affine. Latent coordinate j
  // enters the first layer scaled by latent_decay^j.
  std::vector<Index> widths;
  double latent_decay = 1.0;

  // blob-image
  Index width = 32;
  Index height = 32;
  Index channels = 1;
  Index blobs = 3;
};

/// Validates the spec and returns the generator as a feature map named
/// "generator". Image generators carry their ImageShape.
FeatureMap build_generator(const GeneratorSpec& spec);

/// Exact Jacobian for linear, quadratic and smooth-mlp generators.
Matrix analytic_jacobian(const GeneratorSpec& spec, const Vector& z);

/// Convenience for blob-image specs.
ImageBuffer render_blob_image(const GeneratorSpec& spec, const Vector& z);

/// Layout of the blob generator's latent controls. Coordinates past the
/// primary block are folded in through a fixed seeded mixing matrix.
namespace blob_latent {
inline constexpr Index kCenterX = 0;
inline constexpr Index kCenterY = 1;
inline constexpr Index kRadius = 2;
inline constexpr Index kAmplitude = 3;
inline constexpr Index kSlopeX = 4;
inline constexpr Index kSlopeY = 5;
inline constexpr Index kTexturePhase = 6;
inline constexpr Index kTextureFrequency = 7;
/// Each additional blob takes four controls: center x, center y, radius, amplitude.
inline constexpr Index kFirstExtraBlob = 8;
}  // namespace blob_latent

}  // namespace reds
