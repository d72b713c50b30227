#pragma once

#include "reds/types.hpp"

#include <functional>
#include <optional>
#include <string>

namespace reds {

struct ImageShape {
  Index width = 0;
  Index height = 0;
  Index channels = 1;

  Index size() const { return width * height * channels; }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

/// A named deterministic map from latent space to R^k. Generators and feature
/// extractors share this type; composition builds new maps from old ones.
/// Evaluators must be reentrant.
class FeatureMap {
 public:
  using Evaluator = std::function<Vector(const Vector&)>;
  using JacobianFn = std::function<Matrix(const Vector&)>;

  FeatureMap() = default;
  FeatureMap(std::string name, Index latent_dim, Index output_dim, Evaluator evaluator,
             JacobianFn jacobian = {}, std::optional<ImageShape> image = std::nullopt);

  const std::string& name() const { return name_; }
  Index latent_dim() const { return latent_dim_; }
  Index output_dim() const { return output_dim_; }
  /// Set when the output is a row-major image of this shape.
  const std::optional<ImageShape>& image_shape() const { return image_; }
  bool has_analytic_jacobian() const { return static_cast<bool>(jacobian_); }

  /// Evaluates and checks the output length.
  Vector operator()(const Vector& z) const;

  /// Throws UnsupportedCapability when no analytic Jacobian was supplied.
  Matrix analytic_jacobian(const Vector& z) const;

  FeatureMap renamed(std::string name) const;

 private:
  std::string name_;
  Index latent_dim_ = 0;
  Index output_dim_ = 0;
  Evaluator evaluator_;
  JacobianFn jacobian_;
  std::optional<ImageShape> image_;
};

}  // namespace reds
