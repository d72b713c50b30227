#include "reds/local_geometry.hpp"

#include <cmath>
#include <sstream>

namespace reds {

FeatureMap::FeatureMap(std::string name, Index latent_dim, Index output_dim, Evaluator evaluator,
                       JacobianFn jacobian, std::optional<ImageShape> image)
    : name_(std::move(name)),
      latent_dim_(latent_dim),
      output_dim_(output_dim),
      evaluator_(std::move(evaluator)),
      jacobian_(std::move(jacobian)),
      image_(image) {
  if (latent_dim_ < 1 || output_dim_ < 1) {
    fail(ErrorKind::InvalidConfig, "feature map '" + name_ + "' needs positive dimensions");
  }
  if (image_ && image_->size() != output_dim_) {
    fail(ErrorKind::InvalidConfig, "feature map '" + name_ + "' image shape disagrees with output dim");
  }
}

Vector FeatureMap::operator()(const Vector& z) const {
  if (z.size() != latent_dim_) {
    std::ostringstream msg;
    msg << "feature map '" << name_ << "' expects latent dim " << latent_dim_ << ", got " << z.size();
    fail(ErrorKind::InvalidInput, msg.str());
  }
  Vector out = evaluator_(z);
  if (out.size() != output_dim_) {
    std::ostringstream msg;
    msg << "feature map '" << name_ << "' returned " << out.size() << " values, declared "
        << output_dim_;
    fail(ErrorKind::Evaluation, msg.str());
  }
  return out;
}

Matrix FeatureMap::analytic_jacobian(const Vector& z) const {
  if (!jacobian_) {
    fail(ErrorKind::UnsupportedCapability, "feature map '" + name_ + "' has no analytic Jacobian");
  }
  return jacobian_(z);
}

FeatureMap FeatureMap::renamed(std::string name) const {
  FeatureMap copy = *this;
  copy.name_ = std::move(name);
  return copy;
}

double default_fd_step(const Vector& z) {
  const double d = static_cast<double>(z.size());
  return 1e-3 * (1.0 + z.norm() / std::sqrt(d));
}

JacobianMatrix fd_jacobian(const FeatureMap& map, const Vector& z, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    std::ostringstream msg;
    msg << "finite-difference step must be positive, got " << eps;
    fail(ErrorKind::InvalidInput, msg.str());
  }
  if (!z.allFinite()) fail(ErrorKind::InvalidInput, "latent point has non-finite coordinates");

  JacobianMatrix out;
  out.fd_step = eps;
  out.base_value = map(z);
  if (!out.base_value.allFinite()) {
    fail(ErrorKind::Evaluation, "map '" + map.name() + "' is non-finite at the base point");
  }
  const Index d = z.size();
  out.values.resize(map.output_dim(), d);
  Vector probe = z;
  for (Index j = 0; j < d; ++j) {
    probe[j] = z[j] + eps;
    const Vector plus = map(probe);
    probe[j] = z[j] - eps;
    const Vector minus = map(probe);
    probe[j] = z[j];
    if (!plus.allFinite() || !minus.allFinite()) {
      std::ostringstream msg;
      msg << "map '" << map.name() << "' is non-finite at perturbation index " << j;
      fail(ErrorKind::Evaluation, msg.str());
    }
    out.values.col(j) = (plus - minus) / (2.0 * eps);
  }
  return out;
}

GramMatrix gram(const Matrix& j) {
  if (!j.allFinite()) fail(ErrorKind::InvalidInput, "Jacobian has non-finite entries");
  return GramMatrix::from_product(j.transpose() * j);
}

GramMatrix gram(const JacobianMatrix& j) { return gram(j.values); }

LocalGeometry local_geometry(std::span<const FeatureMap> fixed_maps, const FeatureMap& changing_map,
                             const Vector& z, double eps) {
  const Index d = z.size();
  auto check_dim = [d](const FeatureMap& m) {
    if (m.latent_dim() != d) {
      std::ostringstream msg;
      msg << "feature map '" << m.name() << "' has latent dim " << m.latent_dim() << ", point has " << d;
      fail(ErrorKind::InvalidInput, msg.str());
    }
  };
  auto jacobian_of = [&](const FeatureMap& m) {
    try {
      return fd_jacobian(m, z, eps);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Evaluation) throw;
      throw Error(ErrorKind::Evaluation, "while differentiating '" + m.name() + "': " + e.what());
    }
  };

  LocalGeometry geometry;
  geometry.point = z;
  geometry.fd_step = eps;
  for (const auto& m : fixed_maps) {
    check_dim(m);
    JacobianMatrix j = jacobian_of(m);
    geometry.fixed_grams.push_back(gram(j));
    geometry.fixed_values.push_back(std::move(j.base_value));
  }
  check_dim(changing_map);
  JacobianMatrix jc = jacobian_of(changing_map);
  geometry.changing_gram = gram(jc);
  geometry.changing_value = std::move(jc.base_value);
  return geometry;
}

}  // namespace reds
