#pragma once

// Central-difference Jacobians of feature maps and the Gram matrices built
// from them.

#include "reds/feature_map.hpp"
#include "reds/spectral.hpp"

#include <span>
#include <vector>

namespace reds {

struct JacobianMatrix {
  Matrix values;      ///< rows = feature dim, cols = latent dim
  double fd_step = 0.0;
  Vector base_value;  ///< map(z), evaluated once for bookkeeping
};

struct LocalGeometry {
  Vector point;
  std::vector<GramMatrix> fixed_grams;
  GramMatrix changing_gram;
  double fd_step = 0.0;
  std::vector<Vector> fixed_values;
  Vector changing_value;
};

/// Step used when a config asks for "auto": 1e-3 * (1 + |z| / sqrt(d)).
double default_fd_step(const Vector& z);

/// Column j = (map(z + eps e_j) - map(z - eps e_j)) / (2 eps).
JacobianMatrix fd_jacobian(const FeatureMap& map, const Vector& z, double eps);

GramMatrix gram(const JacobianMatrix& j);
GramMatrix gram(const Matrix& j);

LocalGeometry local_geometry(std::span<const FeatureMap> fixed_maps, const FeatureMap& changing_map,
                             const Vector& z, double eps);

}  // namespace reds
