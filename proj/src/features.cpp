#include "reds/features.hpp"

#include "reds/rng.hpp"

#include <cmath>
#include <memory>
#include <sstream>

namespace reds {

namespace {

const ImageShape& require_image(const FeatureMap& g, const char* what) {
  if (!g.image_shape()) {
    fail(ErrorKind::InvalidConfig, std::string(what) + " needs an image-valued generator, '" + g.name() +
                                       "' is not one");
  }
  return *g.image_shape();
}

// Reflect without repeating the edge sample: -1 -> 1, n -> n - 2.
Index reflect(Index i, Index n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

std::vector<double> gaussian_kernel(double sigma) {
  const auto radius = static_cast<Index>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (Index i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

void check_sigma(const ImageShape& s, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(ErrorKind::InvalidConfig, "band sigma must be positive");
  const auto radius = static_cast<Index>(std::ceil(3.0 * sigma));
  if (radius >= s.width || radius >= s.height) {
    std::ostringstream msg;
    msg << "blur radius " << radius << " (sigma " << sigma << ") exceeds image size " << s.width << "x"
        << s.height;
    fail(ErrorKind::InvalidConfig, msg.str());
  }
}

}  // namespace

Vector gaussian_blur(const ImageShape& s, const Vector& image, double sigma) {
  check_sigma(s, sigma);
  const std::vector<double> k = gaussian_kernel(sigma);
  const auto radius = static_cast<Index>(k.size() / 2);
  auto idx = [&s](Index x, Index y, Index c) { return (y * s.width + x) * s.channels + c; };

  Vector horizontal(image.size());
  for (Index y = 0; y < s.height; ++y)
    for (Index x = 0; x < s.width; ++x)
      for (Index c = 0; c < s.channels; ++c) {
        double acc = 0.0;
        for (Index t = -radius; t <= radius; ++t) {
          acc += k[static_cast<std::size_t>(t + radius)] * image[idx(reflect(x + t, s.width), y, c)];
        }
        horizontal[idx(x, y, c)] = acc;
      }
  Vector out(image.size());
  for (Index y = 0; y < s.height; ++y)
    for (Index x = 0; x < s.width; ++x)
      for (Index c = 0; c < s.channels; ++c) {
        double acc = 0.0;
        for (Index t = -radius; t <= radius; ++t) {
          acc += k[static_cast<std::size_t>(t + radius)] * horizontal[idx(x, reflect(y + t, s.height), c)];
        }
        out[idx(x, y, c)] = acc;
      }
  return out;
}

FeatureMap raw_feature(const FeatureMap& generator) { return generator.renamed("raw"); }

std::vector<Index> region_indices(const ImageShape& s, const RegionMask& mask) {
  if (!(0 <= mask.x0 && mask.x0 < mask.x1 && mask.x1 <= s.width && 0 <= mask.y0 && mask.y0 < mask.y1 &&
        mask.y1 <= s.height)) {
    std::ostringstream msg;
    msg << "region [" << mask.x0 << "," << mask.x1 << ")x[" << mask.y0 << "," << mask.y1
        << ") is not inside a " << s.width << "x" << s.height << " image";
    fail(ErrorKind::InvalidConfig, msg.str());
  }
  std::vector<Index> rows;
  for (Index y = 0; y < s.height; ++y)
    for (Index x = 0; x < s.width; ++x) {
      const bool inside = x >= mask.x0 && x < mask.x1 && y >= mask.y0 && y < mask.y1;
      if (inside == (mask.polarity == Polarity::Inside)) {
        for (Index c = 0; c < s.channels; ++c) rows.push_back((y * s.width + x) * s.channels + c);
      }
    }
  if (rows.empty()) fail(ErrorKind::InvalidConfig, "region selects no pixels");
  return rows;
}

FeatureMap region_feature(const FeatureMap& generator, const RegionMask& mask) {
  const ImageShape& shape = require_image(generator, "region_feature");
  auto rows = std::make_shared<const std::vector<Index>>(region_indices(shape, mask));
  auto select = [rows](const auto& full) {
    using M = std::decay_t<decltype(full)>;
    M out(static_cast<Index>(rows->size()), full.cols());
    for (std::size_t r = 0; r < rows->size(); ++r) out.row(static_cast<Index>(r)) = full.row((*rows)[r]);
    return out;
  };
  FeatureMap::JacobianFn jacobian;
  if (generator.has_analytic_jacobian()) {
    jacobian = [generator, select](const Vector& z) { return select(generator.analytic_jacobian(z)); };
  }
  return FeatureMap(
      mask.polarity == Polarity::Inside ? "region-inside" : "region-outside", generator.latent_dim(),
      static_cast<Index>(rows->size()),
      [generator, select](const Vector& z) -> Vector { return select(Matrix(generator(z))).col(0); },
      std::move(jacobian));
}

FeatureMap band_feature(const FeatureMap& generator, const BandSplit& split) {
  const ImageShape shape = require_image(generator, "band_feature");
  check_sigma(shape, split.sigma);
  const double sigma = split.sigma;
  const bool high = split.band == Band::High;
  auto apply = [shape, sigma, high](const Vector& image) -> Vector {
    Vector low = gaussian_blur(shape, image, sigma);
    return high ? Vector(image - low) : low;
  };
  FeatureMap::JacobianFn jacobian;
  if (generator.has_analytic_jacobian()) {
    jacobian = [generator, apply](const Vector& z) {
      Matrix j = generator.analytic_jacobian(z);
      for (Index c = 0; c < j.cols(); ++c) j.col(c) = apply(j.col(c));
      return j;
    };
  }
  return FeatureMap(high ? "band-high" : "band-low", generator.latent_dim(), generator.output_dim(),
                    [generator, apply](const Vector& z) { return apply(generator(z)); }, std::move(jacobian),
                    shape);
}

FeatureMap linear_embed_feature(const FeatureMap& generator, const Matrix& embedding) {
  if (embedding.cols() != generator.output_dim() || embedding.rows() < 1) {
    fail(ErrorKind::InvalidConfig, "embedding matrix must have generator output_dim columns");
  }
  auto e = std::make_shared<const Matrix>(embedding);
  FeatureMap::JacobianFn jacobian;
  if (generator.has_analytic_jacobian()) {
    jacobian = [generator, e](const Vector& z) -> Matrix {
      const Vector h = (*e * generator(z)).array().tanh().matrix();
      const Vector slope = (1.0 - h.array().square()).matrix();
      return slope.asDiagonal() * (*e * generator.analytic_jacobian(z));
    };
  }
  return FeatureMap(
      "embed", generator.latent_dim(), e->rows(),
      [generator, e](const Vector& z) -> Vector { return (*e * generator(z)).array().tanh().matrix(); },
      std::move(jacobian));
}

FeatureMap linear_embed_feature(const FeatureMap& generator, std::uint64_t embed_seed, Index embed_dim) {
  if (embed_dim < 1) fail(ErrorKind::InvalidConfig, "embed_dim must be >= 1");
  Rng rng(derive_seed(embed_seed, 0x55));
  const Index n = generator.output_dim();
  return linear_embed_feature(generator,
                              rng.normal_matrix(embed_dim, n, 1.0 / std::sqrt(static_cast<double>(n))));
}

FeatureMap scalar_attribute_feature(const FeatureMap& generator, const Vector& weights, double bias) {
  if (weights.size() != generator.output_dim()) {
    fail(ErrorKind::InvalidConfig, "attribute weights must match generator output_dim");
  }
  FeatureMap::JacobianFn jacobian;
  if (generator.has_analytic_jacobian()) {
    jacobian = [generator, weights](const Vector& z) -> Matrix {
      return weights.transpose() * generator.analytic_jacobian(z);
    };
  }
  return FeatureMap(
      "attribute", generator.latent_dim(), 1,
      [generator, weights, bias](const Vector& z) -> Vector {
        Vector out(1);
        out[0] = weights.dot(generator(z)) + bias;
        return out;
      },
      std::move(jacobian));
}

FeatureMap scalar_attribute_feature(const FeatureMap& generator, std::uint64_t weight_seed) {
  Rng rng(derive_seed(weight_seed, 0x66));
  const Index n = generator.output_dim();
  const Vector w = rng.normal_vector(n) / std::sqrt(static_cast<double>(n));
  const double b = 0.1 * rng.normal();
  return scalar_attribute_feature(generator, w, b);
}

FeatureMap concat_features(std::span<const FeatureMap> maps) {
  if (maps.empty()) fail(ErrorKind::InvalidConfig, "concat_features needs at least one map");
  const Index d = maps.front().latent_dim();
  Index total = 0;
  bool analytic = true;
  for (const auto& m : maps) {
    if (m.latent_dim() != d) fail(ErrorKind::InvalidConfig, "concatenated maps must share latent_dim");
    total += m.output_dim();
    analytic = analytic && m.has_analytic_jacobian();
  }
  auto parts = std::make_shared<const std::vector<FeatureMap>>(maps.begin(), maps.end());
  FeatureMap::JacobianFn jacobian;
  if (analytic) {
    jacobian = [parts, total](const Vector& z) {
      Matrix j(total, z.size());
      Index offset = 0;
      for (const auto& m : *parts) {
        j.middleRows(offset, m.output_dim()) = m.analytic_jacobian(z);
        offset += m.output_dim();
      }
      return j;
    };
  }
  return FeatureMap(
      "concat", d, total,
      [parts, total](const Vector& z) {
        Vector out(total);
        Index offset = 0;
        for (const auto& m : *parts) {
          out.segment(offset, m.output_dim()) = m(z);
          offset += m.output_dim();
        }
        return out;
      },
      std::move(jacobian));
}

}  // namespace reds
