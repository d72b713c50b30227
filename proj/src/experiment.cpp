#include "reds/experiment.hpp"

#include "reds/rng.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace reds {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  fail(ErrorKind::InvalidConfig, (path.empty() ? std::string("config") : path) + ": " + what);
}

/// Reads keys from one JSON object and rejects whatever is left unread.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) config_error(path_, "expected an object");
  }

  bool has(const std::string& key) const { return object_.contains(key); }

  const json& required(const std::string& key) {
    used_.insert(key);
    if (!object_.contains(key)) config_error(child(key), "missing required field");
    return object_.at(key);
  }

  const json* optional(const std::string& key) {
    used_.insert(key);
    return object_.contains(key) ? &object_.at(key) : nullptr;
  }

  double number(const std::string& key) { return as_number(required(key), child(key)); }
  double number_or(const std::string& key, double fallback) {
    const json* v = optional(key);
    return v ? as_number(*v, child(key)) : fallback;
  }
  Index integer(const std::string& key) { return as_integer(required(key), child(key)); }
  Index integer_or(const std::string& key, Index fallback) {
    const json* v = optional(key);
    return v ? as_integer(*v, child(key)) : fallback;
  }
  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    const json* v = optional(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
      config_error(child(key), "expected a non-negative integer seed");
    }
    return v->get<std::uint64_t>();
  }
  std::string string(const std::string& key) { return as_string(required(key), child(key)); }
  std::string string_or(const std::string& key, const std::string& fallback) {
    const json* v = optional(key);
    return v ? as_string(*v, child(key)) : fallback;
  }
  bool boolean_or(const std::string& key, bool fallback) {
    const json* v = optional(key);
    if (!v) return fallback;
    if (!v->is_boolean()) config_error(child(key), "expected a boolean");
    return v->get<bool>();
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!used_.count(key)) config_error(child(key), "unknown key");
    }
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) config_error(path, "expected a number");
    return v.get<double>();
  }
  static Index as_integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) config_error(path, "expected an integer");
    return static_cast<Index>(v.get<std::int64_t>());
  }
  static std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) config_error(path, "expected a string");
    return v.get<std::string>();
  }

 private:
  const json& object_;
  std::string path_;
  std::set<std::string> used_;
};

Matrix parse_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) config_error(path, "expected a non-empty array of rows");
  const auto rows = static_cast<Index>(v.size());
  Index cols = -1;
  Matrix m;
  for (Index r = 0; r < rows; ++r) {
    const json& row = v[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.empty()) config_error(path, "rows must be non-empty arrays");
    if (cols < 0) {
      cols = static_cast<Index>(row.size());
      m.resize(rows, cols);
    }
    if (static_cast<Index>(row.size()) != cols) config_error(path, "rows differ in length");
    for (Index c = 0; c < cols; ++c) m(r, c) = ObjectReader::as_number(row[static_cast<std::size_t>(c)], path);
  }
  return m;
}

Vector parse_vector(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) config_error(path, "expected a non-empty array of numbers");
  Vector out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Index>(i)] = ObjectReader::as_number(v[i], path);
  return out;
}

GeneratorSpec parse_generator(const json& v, const std::string& path) {
  ObjectReader r(v, path);
  GeneratorSpec g;
  const std::string kind = r.string("kind");
  g.latent_dim = r.integer("latent_dim");
  g.seed = r.seed("seed", 0);
  if (kind == "linear") {
    g.kind = GeneratorKind::Linear;
    if (const json* m = r.optional("matrix")) g.matrix = parse_matrix(*m, r.child("matrix"));
    if (r.boolean_or("identity", false)) {
      if (g.matrix) config_error(path, "give either matrix or identity, not both");
      g.matrix = Matrix::Identity(g.latent_dim, g.latent_dim);
    }
    g.output_dim = r.integer_or("output_dim", g.matrix ? g.matrix->rows() : 0);
    if (g.matrix && g.output_dim != g.matrix->rows()) config_error(r.child("output_dim"), "disagrees with matrix rows");
  } else if (kind == "quadratic") {
    g.kind = GeneratorKind::Quadratic;
    const std::string form = r.string_or("form", "sphere");
    if (form == "sphere") {
      g.form = QuadraticForm::Sphere;
    } else if (form == "random") {
      g.form = QuadraticForm::Random;
      g.output_dim = r.integer("output_dim");
    } else {
      config_error(r.child("form"), "expected 'sphere' or 'random'");
    }
  } else if (kind == "smooth-mlp") {
    g.kind = GeneratorKind::SmoothMlp;
    const json& widths = r.required("widths");
    if (!widths.is_array()) config_error(r.child("widths"), "expected an array");
    for (const auto& w : widths) g.widths.push_back(ObjectReader::as_integer(w, r.child("widths")));
    g.latent_decay = r.number_or("latent_decay", 1.0);
  } else if (kind == "blob-image") {
    g.kind = GeneratorKind::BlobImage;
    g.width = r.integer_or("width", 32);
    g.height = r.integer_or("height", 32);
    g.channels = r.integer_or("channels", 1);
    g.blobs = r.integer_or("blobs", 3);
  } else {
    config_error(r.child("kind"), "unknown generator kind '" + kind + "'");
  }
  r.finish();
  return g;
}

FeatureSpec parse_feature(const json& v, const std::string& path, bool top_level, double default_beta) {
  ObjectReader r(v, path);
  FeatureSpec f;
  const std::string type = r.string("type");
  f.name = top_level ? r.string("name") : r.string_or("name", type);
  if (f.name.empty() || f.name.find_first_of(",\"\n") != std::string::npos) {
    config_error(r.child("name"), "names must be non-empty and free of commas, quotes and newlines");
  }
  if (top_level) f.beta = r.number_or("beta", default_beta);
  if (type == "raw") {
    f.type = FeatureType::Raw;
  } else if (type == "region") {
    f.type = FeatureType::Region;
    const json& rect = r.required("rect");
    if (!rect.is_array() || rect.size() != 4) config_error(r.child("rect"), "expected [x0, y0, x1, y1]");
    f.region.x0 = ObjectReader::as_integer(rect[0], r.child("rect"));
    f.region.y0 = ObjectReader::as_integer(rect[1], r.child("rect"));
    f.region.x1 = ObjectReader::as_integer(rect[2], r.child("rect"));
    f.region.y1 = ObjectReader::as_integer(rect[3], r.child("rect"));
    const std::string polarity = r.string_or("polarity", "inside");
    if (polarity == "inside") {
      f.region.polarity = Polarity::Inside;
    } else if (polarity == "outside") {
      f.region.polarity = Polarity::Outside;
    } else {
      config_error(r.child("polarity"), "expected 'inside' or 'outside'");
    }
  } else if (type == "band") {
    f.type = FeatureType::Band;
    f.band.sigma = r.number("sigma");
    const std::string band = r.string("band");
    if (band == "low") {
      f.band.band = Band::Low;
    } else if (band == "high") {
      f.band.band = Band::High;
    } else {
      config_error(r.child("band"), "expected 'low' or 'high'");
    }
  } else if (type == "linear-embed") {
    f.type = FeatureType::LinearEmbed;
    f.embed_dim = r.integer("embed_dim");
    f.seed = r.seed("seed", 0);
  } else if (type == "scalar") {
    f.type = FeatureType::Scalar;
    f.seed = r.seed("seed", 0);
    if (const json* w = r.optional("weights")) f.weights = parse_vector(*w, r.child("weights"));
    f.bias = r.number_or("bias", 0.0);
  } else if (type == "concat") {
    f.type = FeatureType::Concat;
    const json& parts = r.required("parts");
    if (!parts.is_array() || parts.empty()) config_error(r.child("parts"), "expected a non-empty array");
    for (std::size_t i = 0; i < parts.size(); ++i) {
      f.parts.push_back(parse_feature(parts[i], r.child("parts") + "[" + std::to_string(i) + "]", false, 0.0));
    }
  } else {
    config_error(r.child("type"), "unknown feature type '" + type + "'");
  }
  r.finish();
  return f;
}

TraversalConfig parse_traversal(const json& v, const std::string& path, std::uint64_t default_seed) {
  ObjectReader r(v, path);
  TraversalConfig t;
  try {
    t.method = parse_method_kind(r.string_or("method", "linear"));
    t.selector = parse_selector(r.string_or("selector", "reds"));
  } catch (const Error& e) {
    config_error(path, e.what());
  }
  if (const json* eps = r.optional("fd_eps")) {
    if (eps->is_string()) {
      if (eps->get<std::string>() != "auto") config_error(r.child("fd_eps"), "expected a number or \"auto\"");
    } else {
      t.fd_eps = ObjectReader::as_number(*eps, r.child("fd_eps"));
    }
  }
  t.step = r.number("step");
  t.length = r.integer("length");
  t.paths_per_seed = r.integer_or("paths_per_seed", 5);
  t.projection_floor = r.number_or("projection_floor", 0.1);
  t.geometry_stride = r.integer_or("geometry_stride", 1);
  t.global_samples = r.integer_or("global_samples", 0);
  t.rng_seed = r.seed("rng_seed", default_seed);
  const std::string mode = r.string_or("rank_mode", "squared");
  if (mode == "squared") {
    t.rank_mode = RankMode::Squared;
  } else if (mode == "literal") {
    t.rank_mode = RankMode::Literal;
  } else {
    config_error(r.child("rank_mode"), "expected 'squared' or 'literal'");
  }
  r.finish();
  return t;
}

}  // namespace

ExperimentConfig parse_config(const json& document) {
  ObjectReader r(document, "");
  ExperimentConfig c;
  const Index version = r.integer("schema_version");
  if (version != kSchemaVersion) {
    config_error("schema_version", "unsupported version " + std::to_string(version));
  }
  c.name = r.string_or("name", "experiment");
  c.generator = parse_generator(r.required("generator"), "generator");

  const json& fixed = r.required("fixed_features");
  if (!fixed.is_array()) config_error("fixed_features", "expected an array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    c.fixed_features.push_back(parse_feature(fixed[i], "fixed_features[" + std::to_string(i) + "]", true, 0.99));
    if (!names.insert(c.fixed_features.back().name).second) {
      config_error("fixed_features[" + std::to_string(i) + "].name", "duplicate feature name");
    }
  }
  c.changing_feature = parse_feature(r.required("changing_feature"), "changing_feature", true, 0.999);

  {
    ObjectReader s(r.required("seeds"), "seeds");
    c.seeds.count = s.integer("count");
    c.seeds.master_seed = s.seed("master_seed", 0);
    c.seeds.latent_scale = s.number_or("latent_scale", 1.0);
    s.finish();
    if (c.seeds.count < 1) config_error("seeds.count", "must be >= 1");
    if (!(c.seeds.latent_scale > 0.0)) config_error("seeds.latent_scale", "must be positive");
  }

  c.traversal = parse_traversal(r.required("traversal"), "traversal", c.seeds.master_seed);
  for (const auto& f : c.fixed_features) c.traversal.beta_f.push_back(f.beta);
  c.traversal.beta_c = c.changing_feature.beta;
  try {
    c.traversal.validate(c.fixed_features.size());
  } catch (const Error& e) {
    config_error("traversal", e.what());
  }

  if (const json* out = r.optional("output_dir")) c.output_dir = ObjectReader::as_string(*out, "output_dir");
  if (const json* emit = r.optional("emit")) {
    ObjectReader e(*emit, "emit");
    c.emit.strips = e.boolean_or("strips", false);
    c.emit.plots = e.boolean_or("plots", false);
    e.finish();
  }
  r.finish();
  c.source = document;
  return c;
}

void apply_override(json& document, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) config_error("--override", "expected key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  json* node = &document;
  std::string path;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    path += (path.empty() ? "" : ".") + part;
    if (!node->is_object()) config_error(path, "override path does not name an object field");
    if (dot == std::string::npos) {
      if (node->contains(part) && ((*node)[part].is_object() || (*node)[part].is_array())) {
        config_error(path, "only scalar fields can be overridden");
      }
      json value = json::parse(text, nullptr, false);
      if (value.is_discarded() || value.is_object() || value.is_array()) value = text;
      (*node)[part] = std::move(value);
      return;
    }
    if (!node->contains(part)) config_error(path, "override path does not exist");
    node = &(*node)[part];
    start = dot + 1;
  }
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream file(path);
  if (!file) fail(ErrorKind::InvalidConfig, "cannot read config " + path.string());
  json document = json::parse(file, nullptr, false);
  if (document.is_discarded()) fail(ErrorKind::InvalidConfig, "config " + path.string() + " is not valid JSON");
  for (const auto& o : overrides) apply_override(document, o);
  return parse_config(document);
}

FeatureMap build_feature(const FeatureMap& generator, const FeatureSpec& spec) {
  FeatureMap map;
  switch (spec.type) {
    case FeatureType::Raw:
      map = raw_feature(generator);
      break;
    case FeatureType::Region:
      map = region_feature(generator, spec.region);
      break;
    case FeatureType::Band:
      map = band_feature(generator, spec.band);
      break;
    case FeatureType::LinearEmbed:
      map = linear_embed_feature(generator, spec.seed, spec.embed_dim);
      break;
    case FeatureType::Scalar:
      map = spec.weights ? scalar_attribute_feature(generator, *spec.weights, spec.bias)
                         : scalar_attribute_feature(generator, spec.seed);
      break;
    case FeatureType::Concat: {
      std::vector<FeatureMap> parts;
      for (const auto& p : spec.parts) parts.push_back(build_feature(generator, p));
      map = concat_features(parts);
      break;
    }
  }
  return map.renamed(spec.name);
}

std::vector<Vector> seed_points(const SeedSpec& seeds, Index latent_dim) {
  std::vector<Vector> points;
  for (Index i = 0; i < seeds.count; ++i) {
    Rng rng(derive_seed(seeds.master_seed, 0x5EED, static_cast<std::uint64_t>(i)));
    points.push_back(seeds.latent_scale * rng.normal_vector(latent_dim));
  }
  return points;
}

std::string Experiment::method_name() const { return method().name; }

MethodSpec Experiment::method() const {
  const auto& t = config.traversal;
  if (t.selector == Selector::Reds) {
    return {t.method == Method::Projection ? "reds-proj" : "reds-lin", Selector::Reds, t.method};
  }
  return {to_string(t.selector), t.selector, Method::Linear};
}

Experiment materialize(const ExperimentConfig& config, unsigned workers) {
  Experiment e;
  e.config = config;
  e.generator = build_generator(config.generator);
  for (const auto& f : config.fixed_features) {
    e.testbed.fixed_maps.push_back(build_feature(e.generator, f));
    e.fixed_names.push_back(f.name);
  }
  e.testbed.changing_map = build_feature(e.generator, config.changing_feature);
  e.testbed.config = config.traversal;
  e.testbed.seed_points = seed_points(config.seeds, config.generator.latent_dim);
  e.testbed.workers = workers;
  return e;
}

}  // namespace reds
