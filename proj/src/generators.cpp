#include "reds/generators.hpp"

#include "reds/rng.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

namespace reds {

const char* to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::Linear: return "linear";
    case GeneratorKind::Quadratic: return "quadratic";
    case GeneratorKind::SmoothMlp: return "smooth-mlp";
    case GeneratorKind::BlobImage: return "blob-image";
  }
  return "unknown";
}

namespace {

struct LinearModel {
  Matrix m;
};

LinearModel make_linear(const GeneratorSpec& spec) {
  if (spec.matrix) {
    if (spec.matrix->cols() != spec.latent_dim || spec.matrix->rows() < 1) {
      fail(ErrorKind::InvalidConfig, "linear generator matrix must have latent_dim columns");
    }
    if (!spec.matrix->allFinite()) fail(ErrorKind::InvalidConfig, "linear generator matrix is not finite");
    return {*spec.matrix};
  }
  if (spec.output_dim < 1) fail(ErrorKind::InvalidConfig, "linear generator needs output_dim >= 1");
  Rng rng(derive_seed(spec.seed, 0x11));
  return {rng.normal_matrix(spec.output_dim, spec.latent_dim,
                            1.0 / std::sqrt(static_cast<double>(spec.latent_dim)))};
}

struct QuadraticModel {
  std::vector<Matrix> forms;
};

QuadraticModel make_quadratic(const GeneratorSpec& spec) {
  const Index d = spec.latent_dim;
  QuadraticModel model;
  if (spec.form == QuadraticForm::Sphere) {
    model.forms.push_back(Matrix::Identity(d, d));
    return model;
  }
  if (spec.output_dim < 1) fail(ErrorKind::InvalidConfig, "random quadratic generator needs output_dim >= 1");
  Rng rng(derive_seed(spec.seed, 0x22));
  for (Index k = 0; k < spec.output_dim; ++k) {
    const Matrix g = rng.normal_matrix(d, d, 1.0 / std::sqrt(static_cast<double>(d)));
    model.forms.push_back(0.5 * (g + g.transpose()));
  }
  return model;
}

Vector eval_quadratic(const QuadraticModel& q, const Vector& z) {
  Vector out(static_cast<Index>(q.forms.size()));
  for (std::size_t k = 0; k < q.forms.size(); ++k) out[static_cast<Index>(k)] = z.dot(q.forms[k] * z);
  return out;
}

Matrix jacobian_quadratic(const QuadraticModel& q, const Vector& z) {
  Matrix j(static_cast<Index>(q.forms.size()), z.size());
  for (std::size_t k = 0; k < q.forms.size(); ++k) {
    j.row(static_cast<Index>(k)) = 2.0 * (q.forms[k] * z).transpose();
  }
  return j;
}

struct MlpModel {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

MlpModel make_mlp(const GeneratorSpec& spec) {
  const auto& w = spec.widths;
  if (w.size() < 2) fail(ErrorKind::InvalidConfig, "smooth-mlp needs at least input and output widths");
  if (w.front() != spec.latent_dim) {
    fail(ErrorKind::InvalidConfig, "smooth-mlp first width must equal latent_dim");
  }
  for (Index width : w) {
    if (width < 1) fail(ErrorKind::InvalidConfig, "smooth-mlp widths must be positive");
  }
  if (!(spec.latent_decay > 0.0 && spec.latent_decay <= 1.0)) {
    fail(ErrorKind::InvalidConfig, "smooth-mlp latent_decay must lie in (0, 1]");
  }
  Rng rng(derive_seed(spec.seed, 0x33));
  MlpModel model;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const double gain = 1.0 / std::sqrt(static_cast<double>(w[l]));
    model.weights.push_back(rng.normal_matrix(w[l + 1], w[l], gain));
    model.biases.push_back(rng.normal_vector(w[l + 1]) * 0.1);
  }
  for (Index j = 0; j < spec.latent_dim; ++j) {
    model.weights.front().col(j) *= std::pow(spec.latent_decay, static_cast<double>(j));
  }
  return model;
}

Vector eval_mlp(const MlpModel& m, const Vector& z) {
  Vector h = z;
  const std::size_t layers = m.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    h = m.weights[l] * h + m.biases[l];
    if (l + 1 < layers) h = h.array().tanh().matrix();
  }
  return h;
}

Matrix jacobian_mlp(const MlpModel& m, const Vector& z) {
  Vector h = z;
  Matrix j = Matrix::Identity(z.size(), z.size());
  const std::size_t layers = m.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    h = m.weights[l] * h + m.biases[l];
    j = m.weights[l] * j;
    if (l + 1 < layers) {
      h = h.array().tanh().matrix();
      const Vector slope = (1.0 - h.array().square()).matrix();
      j = slope.asDiagonal() * j;
    }
  }
  return j;
}

struct BlobModel {
  ImageShape shape;
  Index blobs = 1;
  Index controls = 0;  // primary control count
  Matrix mixing;       // controls x (d - controls), empty when d <= controls
};

constexpr std::array<std::array<double, 2>, 6> kExtraBlobCenters = {{
    {0.26, 0.72}, {0.74, 0.28}, {0.30, 0.30}, {0.70, 0.70}, {0.50, 0.20}, {0.50, 0.80},
}};
constexpr std::array<double, 3> kChannelGain = {1.0, 0.85, 0.7};

BlobModel make_blob(const GeneratorSpec& spec) {
  if (spec.latent_dim < 8) fail(ErrorKind::InvalidConfig, "blob-image generator needs latent_dim >= 8");
  if (spec.width < 8 || spec.height < 8) fail(ErrorKind::InvalidConfig, "blob-image must be at least 8x8");
  if (spec.channels != 1 && spec.channels != 3) fail(ErrorKind::InvalidConfig, "blob-image channels must be 1 or 3");
  if (spec.blobs < 1) fail(ErrorKind::InvalidConfig, "blob-image needs at least one blob");
  BlobModel model;
  model.shape = {spec.width, spec.height, spec.channels};
  model.blobs = spec.blobs;
  model.controls = blob_latent::kFirstExtraBlob + 4 * (spec.blobs - 1);
  const Index extra = spec.latent_dim - model.controls;
  if (extra > 0) {
    Rng rng(derive_seed(spec.seed, 0x44));
    model.mixing = rng.normal_matrix(model.controls, extra, 0.5 / std::sqrt(static_cast<double>(extra)));
  }
  return model;
}

Vector blob_controls(const BlobModel& m, const Vector& z) {
  Vector p = Vector::Zero(m.controls);
  const Index direct = std::min(m.controls, z.size());
  p.head(direct) = z.head(direct);
  if (m.mixing.size() > 0) p += m.mixing * z.tail(z.size() - m.controls);
  return p;
}

Vector render_blob(const BlobModel& m, const Vector& z) {
  namespace bl = blob_latent;
  const Vector p = blob_controls(m, z);

  struct Blob {
    double cx, cy, inv_two_r2, amp;
  };
  std::vector<Blob> blobs;
  {
    const double r = 0.12 * std::exp(0.4 * std::tanh(p[bl::kRadius]));
    blobs.push_back({0.5 + 0.3 * std::tanh(p[bl::kCenterX]), 0.5 + 0.3 * std::tanh(p[bl::kCenterY]),
                     1.0 / (2.0 * r * r), 2.0 * (1.0 + 0.5 * std::tanh(p[bl::kAmplitude]))});
  }
  for (Index b = 1; b < m.blobs; ++b) {
    const Index o = bl::kFirstExtraBlob + 4 * (b - 1);
    const auto& base = kExtraBlobCenters[static_cast<std::size_t>(b - 1) % kExtraBlobCenters.size()];
    const double r = 0.08 * std::exp(0.4 * std::tanh(p[o + 2]));
    const double sign = (b % 2 == 1) ? -1.0 : 1.0;
    blobs.push_back({base[0] + 0.15 * std::tanh(p[o]), base[1] + 0.15 * std::tanh(p[o + 1]),
                     1.0 / (2.0 * r * r), sign * 1.2 * (1.0 + 0.5 * std::tanh(p[o + 3]))});
  }
  const double slope_x = 0.8 * std::tanh(p[bl::kSlopeX]);
  const double slope_y = 0.8 * std::tanh(p[bl::kSlopeY]);
  const double phase = p[bl::kTexturePhase];
  const double frequency = 7.0 * (1.0 + 0.2 * std::tanh(p[bl::kTextureFrequency]));

  const auto& s = m.shape;
  Vector out(s.size());
  for (Index y = 0; y < s.height; ++y) {
    const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(s.height);
    for (Index x = 0; x < s.width; ++x) {
      const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(s.width);
      double pre = slope_x * (u - 0.5) + slope_y * (v - 0.5);
      for (const auto& b : blobs) {
        const double r2 = (u - b.cx) * (u - b.cx) + (v - b.cy) * (v - b.cy);
        pre += b.amp * std::exp(-r2 * b.inv_two_r2);
      }
      pre += 0.25 * std::sin(2.0 * std::numbers::pi * frequency * (u + v) + phase);
      for (Index c = 0; c < s.channels; ++c) {
        const double shaded = pre * kChannelGain[static_cast<std::size_t>(c)];
        out[(y * s.width + x) * s.channels + c] = 1.0 / (1.0 + std::exp(-shaded));
      }
    }
  }
  return out;
}

void validate_common(const GeneratorSpec& spec) {
  if (spec.latent_dim < 2) {
    std::ostringstream msg;
    msg << "latent_dim must be >= 2, got " << spec.latent_dim;
    fail(ErrorKind::InvalidConfig, msg.str());
  }
}

}  // namespace

FeatureMap build_generator(const GeneratorSpec& spec) {
  validate_common(spec);
  const Index d = spec.latent_dim;
  switch (spec.kind) {
    case GeneratorKind::Linear: {
      auto model = std::make_shared<const LinearModel>(make_linear(spec));
      return FeatureMap(
          "generator", d, model->m.rows(), [model](const Vector& z) -> Vector { return model->m * z; },
          [model](const Vector&) -> Matrix { return model->m; });
    }
    case GeneratorKind::Quadratic: {
      auto model = std::make_shared<const QuadraticModel>(make_quadratic(spec));
      return FeatureMap(
          "generator", d, static_cast<Index>(model->forms.size()),
          [model](const Vector& z) { return eval_quadratic(*model, z); },
          [model](const Vector& z) { return jacobian_quadratic(*model, z); });
    }
    case GeneratorKind::SmoothMlp: {
      auto model = std::make_shared<const MlpModel>(make_mlp(spec));
      return FeatureMap(
          "generator", d, model->weights.back().rows(),
          [model](const Vector& z) { return eval_mlp(*model, z); },
          [model](const Vector& z) { return jacobian_mlp(*model, z); });
    }
    case GeneratorKind::BlobImage: {
      auto model = std::make_shared<const BlobModel>(make_blob(spec));
      return FeatureMap(
          "generator", d, model->shape.size(), [model](const Vector& z) { return render_blob(*model, z); },
          {}, model->shape);
    }
  }
  fail(ErrorKind::InvalidConfig, "unknown generator kind");
}

Matrix analytic_jacobian(const GeneratorSpec& spec, const Vector& z) {
  if (spec.kind == GeneratorKind::BlobImage) {
    fail(ErrorKind::UnsupportedCapability, "blob-image generators are differentiated by finite differences only");
  }
  return build_generator(spec).analytic_jacobian(z);
}

ImageBuffer render_blob_image(const GeneratorSpec& spec, const Vector& z) {
  if (spec.kind != GeneratorKind::BlobImage) fail(ErrorKind::InvalidConfig, "spec is not a blob-image generator");
  const FeatureMap g = build_generator(spec);
  return ImageBuffer::from_vector(*g.image_shape(), g(z));
}

}  // namespace reds
