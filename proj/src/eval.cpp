#include "reds/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

namespace reds {

namespace {

double floored_log10(double v, Index& floored) {
  if (v <= 0.0) {
    ++floored;
    return std::log10(kLogFloor);
  }
  return std::log10(std::max(v, kLogFloor));
}

double cosine_distance(const Vector& a, const Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return na == nb ? 0.0 : 1.0;
  return 1.0 - a.dot(b) / (na * nb);
}

}  // namespace

std::vector<StepRecord> step_distances(std::span<const Vector> points, std::span<const FeatureMap> fixed_maps,
                                       const FeatureMap& changing_map) {
  std::vector<StepRecord> records;
  if (points.empty()) return records;
  auto evaluate = [](const FeatureMap& m, const Vector& z, std::size_t step) {
    try {
      return m(z);
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "evaluating '" << m.name() << "' at step " << step << ": " << e.what();
      throw Error(e.kind(), msg.str());
    }
  };

  std::vector<Vector> y0;
  for (const auto& m : fixed_maps) y0.push_back(evaluate(m, points[0], 0));
  const Vector x0 = evaluate(changing_map, points[0], 0);
  Vector previous_x = x0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    StepRecord r;
    r.step = static_cast<Index>(i);
    for (std::size_t j = 0; j < fixed_maps.size(); ++j) {
      const Vector y = evaluate(fixed_maps[j], points[i], i);
      r.sq_dy.push_back((y - y0[j]).squaredNorm());
      r.cos_dy.push_back(cosine_distance(y, y0[j]));
    }
    const Vector x = evaluate(changing_map, points[i], i);
    r.sq_dx = (x - x0).squaredNorm();
    r.consecutive_dx = (x - previous_x).norm();
    previous_x = x;
    records.push_back(std::move(r));
  }
  return records;
}

MonotoneCheck monotone_progression(std::span<const Vector> points, const FeatureMap& changing_map) {
  std::vector<Vector> xs;
  xs.reserve(points.size());
  for (const auto& z : points) xs.push_back(changing_map(z));
  MonotoneCheck check;
  for (std::size_t i = 0; i + 2 < xs.size(); ++i) {
    ++check.total;
    if ((xs[i] - xs[i + 1]).norm() < (xs[i] - xs[i + 2]).norm()) ++check.satisfied;
  }
  return check;
}

double StepAggregate::total_mean_sq_dy() const {
  double sum = 0.0;
  for (double v : mean_sq_dy) sum += v;
  return sum;
}

namespace {

void finish_logs(StepAggregate& a) {
  Index ignored = 0;
  a.log10_mean_sq_dy.clear();
  for (double v : a.mean_sq_dy) a.log10_mean_sq_dy.push_back(floored_log10(v, ignored));
  a.log10_mean_sq_dx = floored_log10(a.mean_sq_dx, ignored);
}

}  // namespace

std::vector<StepAggregate> aggregate_steps(std::span<const Trajectory> trajectories) {
  if (trajectories.empty()) fail(ErrorKind::InvalidInput, "no trajectories to aggregate");
  std::size_t max_steps = 0;
  std::size_t features = 0;
  for (const auto& t : trajectories) {
    max_steps = std::max(max_steps, t.records.size());
    if (!t.records.empty()) features = t.records.front().sq_dy.size();
  }
  std::vector<StepAggregate> out(max_steps);
  for (std::size_t i = 0; i < max_steps; ++i) {
    StepAggregate& a = out[i];
    a.step = static_cast<Index>(i + 1);
    a.mean_sq_dy.assign(features, 0.0);
    a.mean_log10_sq_dy.assign(features, 0.0);
    for (const auto& t : trajectories) {
      if (t.records.size() <= i) continue;
      const StepRecord& r = t.records[i];
      if (r.sq_dy.size() != features) fail(ErrorKind::InvalidInput, "trajectories disagree on fixed feature count");
      ++a.count;
      for (std::size_t j = 0; j < features; ++j) {
        a.mean_sq_dy[j] += r.sq_dy[j];
        a.mean_log10_sq_dy[j] += floored_log10(r.sq_dy[j], a.floored);
      }
      a.mean_sq_dx += r.sq_dx;
      a.mean_log10_sq_dx += floored_log10(r.sq_dx, a.floored);
    }
    const double n = static_cast<double>(a.count);
    for (std::size_t j = 0; j < features; ++j) {
      a.mean_sq_dy[j] /= n;
      a.mean_log10_sq_dy[j] /= n;
    }
    a.mean_sq_dx /= n;
    a.mean_log10_sq_dx /= n;
    finish_logs(a);
  }
  return out;
}

std::vector<StepAggregate> merge_aggregates(std::span<const StepAggregate> a, std::span<const StepAggregate> b) {
  const std::size_t steps = std::max(a.size(), b.size());
  std::vector<StepAggregate> out;
  for (std::size_t i = 0; i < steps; ++i) {
    const StepAggregate* pa = i < a.size() ? &a[i] : nullptr;
    const StepAggregate* pb = i < b.size() ? &b[i] : nullptr;
    if (!pa || !pb) {
      out.push_back(pa ? *pa : *pb);
      continue;
    }
    if (pa->mean_sq_dy.size() != pb->mean_sq_dy.size()) {
      fail(ErrorKind::InvalidInput, "aggregates disagree on fixed feature count");
    }
    const double wa = static_cast<double>(pa->count);
    const double wb = static_cast<double>(pb->count);
    const double w = wa + wb;
    auto mix = [&](double x, double y) { return w == 0.0 ? 0.0 : (wa * x + wb * y) / w; };
    StepAggregate m;
    m.step = pa->step;
    m.count = pa->count + pb->count;
    m.floored = pa->floored + pb->floored;
    for (std::size_t j = 0; j < pa->mean_sq_dy.size(); ++j) {
      m.mean_sq_dy.push_back(mix(pa->mean_sq_dy[j], pb->mean_sq_dy[j]));
      m.mean_log10_sq_dy.push_back(mix(pa->mean_log10_sq_dy[j], pb->mean_log10_sq_dy[j]));
    }
    m.mean_sq_dx = mix(pa->mean_sq_dx, pb->mean_sq_dx);
    m.mean_log10_sq_dx = mix(pa->mean_log10_sq_dx, pb->mean_log10_sq_dx);
    finish_logs(m);
    out.push_back(std::move(m));
  }
  return out;
}

LogLogFit loglog_slope(std::span<const double> arc_lengths, std::span<const double> values) {
  if (arc_lengths.size() != values.size()) fail(ErrorKind::InvalidInput, "arc length and value counts differ");
  LogLogFit fit;
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(arc_lengths[i] > 0.0) || !std::isfinite(arc_lengths[i])) continue;
    if (values[i] < 0.0 || !std::isfinite(values[i])) {
      fail(ErrorKind::InvalidInput, "log-log fit needs non-negative finite values");
    }
    xs.push_back(std::log(arc_lengths[i]));
    if (values[i] == 0.0) ++fit.floored;
    ys.push_back(std::log(std::max(values[i], kLogFloor)));
  }
  if (xs.size() < 3) fail(ErrorKind::InsufficientData, "log-log fit needs at least three usable points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) fail(ErrorKind::InsufficientData, "log-log fit needs distinct arc lengths");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

OracleReport direction_oracle(const SubspaceBasis& nullspace, const GramMatrix& changing_gram,
                              const Vector& red_direction, Index n_samples, Rng& rng) {
  if (n_samples < 10000) {
    std::ostringstream msg;
    msg << "direction oracle needs at least 1e4 samples, got " << n_samples;
    fail(ErrorKind::InvalidConfig, msg.str());
  }
  if (nullspace.empty()) fail(ErrorKind::EmptySubspace, "direction oracle needs a nonempty nullspace");
  const Matrix& n = nullspace.columns();
  const Matrix& a = changing_gram.matrix();
  // Sampling v = N g / |g| gives v^T A v = g^T (N^T A N) g / |g|^2.
  const Matrix reduced = n.transpose() * a * n;
  const Index k = nullspace.rank();

  OracleReport report;
  report.samples = n_samples;
  report.red_value = red_direction.dot(a * red_direction) / red_direction.squaredNorm();
  report.best_sampled = -std::numeric_limits<double>::infinity();
  constexpr Index kBatch = 4096;
  for (Index done = 0; done < n_samples; done += kBatch) {
    const Index batch = std::min(kBatch, n_samples - done);
    Matrix g(k, batch);
    for (Index c = 0; c < batch; ++c) g.col(c) = rng.normal_vector(k);
    const Matrix ag = reduced * g;
    for (Index c = 0; c < batch; ++c) {
      const double norm2 = g.col(c).squaredNorm();
      if (norm2 == 0.0) continue;
      report.best_sampled = std::max(report.best_sampled, g.col(c).dot(ag.col(c)) / norm2);
    }
  }
  report.relative_gap = (report.best_sampled - report.red_value) / std::max(report.red_value, 1e-15);
  return report;
}

OracleReport direction_oracle(const RedsResult& result, const GramMatrix& changing_gram, Index n_samples, Rng& rng) {
  if (result.basis.empty()) fail(ErrorKind::EmptySubspace, "RedsResult has no directions");
  return direction_oracle(result.nullspace, changing_gram, result.basis.columns().col(0), n_samples, rng);
}

MethodSpec parse_method(const std::string& name) {
  if (name == "reds-lin") return {name, Selector::Reds, Method::Linear};
  if (name == "reds-proj") return {name, Selector::Reds, Method::Projection};
  if (name == "random") return {name, Selector::Random, Method::Linear};
  if (name == "max-dx") return {name, Selector::MaxDx, Method::Linear};
  if (name == "min-dy") return {name, Selector::MinDy, Method::Linear};
  if (name == "global-linear") return {name, Selector::GlobalLinear, Method::Linear};
  fail(ErrorKind::InvalidConfig, "unknown method '" + name + "'");
}

std::vector<MethodSpec> default_methods() {
  std::vector<MethodSpec> out;
  for (const char* name : {"reds-lin", "reds-proj", "random", "max-dx", "min-dy"}) out.push_back(parse_method(name));
  return out;
}

namespace {

TraversalConfig config_for(const Testbed& testbed, const MethodSpec& method) {
  TraversalConfig config = testbed.config;
  config.selector = method.selector;
  config.method = method.method;
  config.validate(testbed.fixed_maps.size());
  return config;
}

}  // namespace

std::optional<Vector> fit_global_direction(const Testbed& testbed, const MethodSpec& method) {
  if (method.selector != Selector::GlobalLinear) return std::nullopt;
  const TraversalConfig config = config_for(testbed, method);
  const Index d = testbed.changing_map.latent_dim();
  const Index n = config.global_samples > 0 ? config.global_samples : std::max<Index>(2000, 10 * d);
  Rng rng(derive_seed(config.rng_seed, 0x61C0BA1ULL));
  return global_linear_direction(testbed.changing_map, testbed.fixed_maps, n, rng);
}

Trajectory run_one(const Testbed& testbed, const MethodSpec& method, std::size_t seed_index, std::size_t path_index,
                   const std::optional<Vector>& global_direction) {
  const TraversalConfig config = config_for(testbed, method);
  if (seed_index >= testbed.seed_points.size() || path_index >= static_cast<std::size_t>(config.paths_per_seed)) {
    fail(ErrorKind::InvalidConfig, "trajectory index out of range");
  }
  Rng rng(derive_seed(config.rng_seed, seed_index, path_index));
  Trajectory t = run_trajectory(testbed.seed_points[seed_index], testbed.fixed_maps, testbed.changing_map, config,
                                rng, global_direction);
  t.seed_index = static_cast<Index>(seed_index);
  t.path_index = static_cast<Index>(path_index);
  t.selector = method.selector;
  t.method = method.method;
  return t;
}

std::vector<Trajectory> run_trajectories(const Testbed& testbed, const MethodSpec& method) {
  const TraversalConfig config = config_for(testbed, method);
  const std::optional<Vector> global_direction = fit_global_direction(testbed, method);

  const std::size_t paths = static_cast<std::size_t>(config.paths_per_seed);
  const std::size_t total = testbed.seed_points.size() * paths;
  std::vector<Trajectory> out(total);
  std::vector<std::exception_ptr> errors(total);

  auto work = [&](std::size_t task) {
    try {
      out[task] = run_one(testbed, method, task / paths, task % paths, global_direction);
    } catch (...) {
      errors[task] = std::current_exception();
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(testbed.workers, static_cast<unsigned>(total)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < total; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < total; i = next++) work(i);
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

ComparisonReport compare_methods(const Testbed& testbed, std::span<const MethodSpec> methods) {
  if (methods.empty()) fail(ErrorKind::InvalidConfig, "no methods to compare");
  ComparisonReport report;
  for (const auto& m : methods) {
    MethodRun run;
    run.method = m;
    run.trajectories = run_trajectories(testbed, m);
    run.aggregates = aggregate_steps(run.trajectories);
    report.runs.push_back(std::move(run));
  }
  // Compare at the deepest step every method reached.
  std::size_t common = std::numeric_limits<std::size_t>::max();
  for (const auto& r : report.runs) common = std::min(common, r.aggregates.size());
  for (const auto& r : report.runs) {
    MethodSummary s;
    s.method = r.method.name;
    if (common > 0) {
      const StepAggregate& a = r.aggregates[common - 1];
      Index ignored = 0;
      s.step = a.step;
      s.count = a.count;
      s.log10_dy = floored_log10(a.total_mean_sq_dy(), ignored);
      s.log10_dx = a.log10_mean_sq_dx;
    }
    report.summaries.push_back(s);
  }
  for (std::size_t i = 0; i < report.summaries.size(); ++i) {
    for (std::size_t j = i + 1; j < report.summaries.size(); ++j) {
      const MethodSummary& a = report.summaries[i];
      const MethodSummary& b = report.summaries[j];
      PairwiseDominance p;
      p.a = a.method;
      p.b = b.method;
      p.delta_log10_dy = a.log10_dy - b.log10_dy;
      p.delta_log10_dx = a.log10_dx - b.log10_dx;
      p.a_dominates = p.delta_log10_dy < 0.0 && p.delta_log10_dx >= 0.0;
      report.pairwise.push_back(p);
    }
  }
  return report;
}

}  // namespace reds
