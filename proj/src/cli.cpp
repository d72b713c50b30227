#include "reds/cli.hpp"

#include "reds/experiment.hpp"
#include "reds/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <thread>

namespace reds::cli {

namespace {

using nlohmann::ordered_json;

constexpr const char* kToolVersion = "0.1.0";

struct CommonOptions {
  std::string config;
  std::string out;
  unsigned workers = 0;
  std::vector<std::string> overrides;
};

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = spdlog::stderr_color_mt("red");
    l->set_level(spdlog::level::warn);
    if (const char* env = std::getenv("RED_LOG_LEVEL")) {
      const std::string level = env;
      if (level == "error") {
        l->set_level(spdlog::level::err);
      } else if (level == "warn") {
        l->set_level(spdlog::level::warn);
      } else if (level == "info") {
        l->set_level(spdlog::level::info);
      } else if (level == "debug") {
        l->set_level(spdlog::level::debug);
      } else {
        l->warn("ignoring unknown RED_LOG_LEVEL '{}'", level);
      }
    }
    return l;
  }();
  return log;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig: return kConfigError;
    case ErrorKind::Io: return kIoError;
    case ErrorKind::EmptySubspace: return kEmptyNullspace;
    default: return kFailure;
  }
}

/// Prints the machine-readable error record to stderr and, when possible,
/// stores it as error.json in the output directory.
int report_error(ErrorKind kind, const std::string& message, const std::string& out_dir, int code) {
  ordered_json record;
  record["error"] = to_string(kind);
  record["message"] = message;
  record["exit_code"] = code;
  std::cerr << record.dump() << "\n";
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (!ec) {
      std::ofstream file(std::filesystem::path(out_dir) / "error.json");
      if (file) file << record.dump(2) << "\n";
    }
  }
  return code;
}

std::string resolve_out(const CommonOptions& options, const ExperimentConfig& config) {
  if (!options.out.empty()) return options.out;
  if (config.output_dir) return config.output_dir->string();
  fail(ErrorKind::InvalidConfig, "no output directory: pass --out or set output_dir in the config");
}

unsigned worker_count(const CommonOptions& options) {
  if (options.workers > 0) return options.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string jsonl(const std::vector<Trajectory>& trajectories, const std::vector<std::string>& names) {
  std::string out;
  for (const auto& t : trajectories) out += trajectory_json_line(t, names) + "\n";
  return out;
}

ordered_json trajectory_statuses(const std::vector<std::pair<std::string, const Trajectory*>>& trajectories) {
  ordered_json list = ordered_json::array();
  for (const auto& [method, t] : trajectories) {
    ordered_json entry;
    entry["method"] = method;
    entry["seed_index"] = t->seed_index;
    entry["path_index"] = t->path_index;
    entry["status"] = to_string(t->status);
    entry["steps_taken"] = t->steps_taken;
    if (!t->note.empty()) entry["note"] = t->note;
    list.push_back(std::move(entry));
  }
  return list;
}

void write_manifest(OutputDir& out, const std::string& command, const ExperimentConfig& config,
                    ordered_json statuses, double seconds) {
  ordered_json manifest;
  manifest["tool"] = "red";
  manifest["version"] = kToolVersion;
  manifest["command"] = command;
  manifest["config_name"] = config.name;
  manifest["config_hash"] = sha256_hex(config.source.dump());
  manifest["wall_clock_seconds"] = seconds;
  manifest["trajectories"] = std::move(statuses);
  ordered_json files = ordered_json::array();
  for (const auto& f : out.files()) {
    ordered_json entry;
    entry["path"] = f.path;
    entry["bytes"] = f.bytes;
    entry["sha256"] = f.sha256;
    files.push_back(std::move(entry));
  }
  manifest["files"] = std::move(files);
  out.write("manifest.json", manifest.dump(2) + "\n");
}

bool all_empty_at_seed(const std::vector<Trajectory>& trajectories) {
  return std::all_of(trajectories.begin(), trajectories.end(),
                     [](const Trajectory& t) { return t.status == TrajectoryStatus::Truncated && t.steps_taken == 0; });
}

[[noreturn]] void empty_everywhere() {
  fail(ErrorKind::EmptySubspace,
       "REDs basis is empty at every seed; lower beta_f for the fixed features to relax the constraints");
}

void write_strip(OutputDir& out, const std::string& prefix, const Experiment& e, const Trajectory& t) {
  const auto& shape = e.generator.image_shape();
  if (!shape) fail(ErrorKind::InvalidConfig, "strips need an image-valued generator");
  std::vector<ImageBuffer> frames;
  for (std::size_t i = 0; i < t.points.size(); ++i) {
    frames.push_back(ImageBuffer::from_vector(*shape, e.generator(t.points[i])));
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%03zu.pgm", i);
    out.write(prefix + name, to_pgm(frames.back()));
  }
  out.write(prefix + "strip.pgm", to_pgm(concat_horizontal(frames)));
}

int cmd_run(const CommonOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig config = load_config(options.config, options.overrides);
  OutputDir out(resolve_out(options, config));
  const Experiment e = materialize(config, worker_count(options));
  const MethodSpec method = e.method();
  logger()->info("run '{}': {} seeds x {} paths, method {}", config.name, e.testbed.seed_points.size(),
                 config.traversal.paths_per_seed, method.name);

  const std::vector<Trajectory> trajectories = run_trajectories(e.testbed, method);
  if (all_empty_at_seed(trajectories)) empty_everywhere();
  const auto aggregates = aggregate_steps(trajectories);

  out.write("trajectories.jsonl", jsonl(trajectories, e.fixed_names));
  out.write("summary.csv", summary_csv({{method.name, aggregates}}, e.fixed_names));
  if (config.emit.plots) {
    ComparisonReport single;
    single.runs.push_back({method, {}, aggregates});
    out.write("plot.svg", comparison_svg(single));
  }
  if (config.emit.strips && e.generator.image_shape()) write_strip(out, "strips/", e, trajectories.front());

  std::vector<std::pair<std::string, const Trajectory*>> statuses;
  for (const auto& t : trajectories) statuses.emplace_back(method.name, &t);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(out, "run", config, trajectory_statuses(statuses), seconds);
  logger()->info("run finished in {:.2f} s", seconds);
  return kOk;
}

int cmd_compare(const CommonOptions& options, const std::string& methods_arg) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig config = load_config(options.config, options.overrides);
  OutputDir out(resolve_out(options, config));
  const Experiment e = materialize(config, worker_count(options));

  std::vector<MethodSpec> methods;
  if (methods_arg.empty()) {
    methods = default_methods();
  } else {
    std::size_t begin = 0;
    while (begin <= methods_arg.size()) {
      const auto comma = methods_arg.find(',', begin);
      const std::string name = methods_arg.substr(begin, comma == std::string::npos ? std::string::npos : comma - begin);
      if (!name.empty()) methods.push_back(parse_method(name));
      if (comma == std::string::npos) break;
      begin = comma + 1;
    }
  }
  if (methods.empty()) fail(ErrorKind::InvalidConfig, "--methods lists no methods");

  const ComparisonReport report = compare_methods(e.testbed, methods);
  bool any_steps = false;
  std::string lines;
  std::vector<std::pair<std::string, std::vector<StepAggregate>>> summary;
  std::vector<std::pair<std::string, const Trajectory*>> statuses;
  for (const auto& run : report.runs) {
    any_steps = any_steps || !all_empty_at_seed(run.trajectories);
    lines += jsonl(run.trajectories, e.fixed_names);
    summary.emplace_back(run.method.name, run.aggregates);
    for (const auto& t : run.trajectories) statuses.emplace_back(run.method.name, &t);
  }
  if (!any_steps) empty_everywhere();

  out.write("trajectories.jsonl", lines);
  out.write("summary.csv", summary_csv(summary, e.fixed_names));
  out.write("comparison.csv", comparison_csv(report, e.fixed_names));
  out.write("dominance.csv", dominance_csv(report));
  out.write("plot.svg", comparison_svg(report));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(out, "compare", config, trajectory_statuses(statuses), seconds);
  return kOk;
}

int cmd_oracle(const CommonOptions& options, long long samples) {
  const auto start = std::chrono::steady_clock::now();
  if (samples < 10000) {
    fail(ErrorKind::InvalidConfig, "--samples must be at least 10000, got " + std::to_string(samples));
  }
  const ExperimentConfig config = load_config(options.config, options.overrides);
  OutputDir out(resolve_out(options, config));
  const Experiment e = materialize(config, worker_count(options));
  const auto& t = e.testbed;

  std::string csv = "seed_index,status,nullspace_dim,changing_rank,red_value,best_sampled,samples,relative_gap\n";
  bool any = false;
  for (std::size_t i = 0; i < t.seed_points.size(); ++i) {
    const Vector& z = t.seed_points[i];
    const LocalGeometry geometry = local_geometry(t.fixed_maps, t.changing_map, z, t.config.fd_step_at(z));
    const RedsResult r = reds_at(geometry, t.config);
    csv += std::to_string(i) + "," + to_string(r.status) + "," + std::to_string(r.nullspace.rank()) + "," +
           std::to_string(r.changing_rank);
    if (r.basis.empty()) {
      csv += ",,,0,\n";
      continue;
    }
    any = true;
    Rng rng(derive_seed(t.config.rng_seed, 0x0AC1E, i));
    const NormalizedGram normalized = spectral_normalize(geometry.changing_gram);
    const OracleReport o = direction_oracle(r, normalized.gram, static_cast<Index>(samples), rng);
    csv += "," + format_double(o.red_value) + "," + format_double(o.best_sampled) + "," + std::to_string(o.samples) +
           "," + format_double(o.relative_gap) + "\n";
  }
  if (!any) empty_everywhere();
  out.write("oracle.csv", csv);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(out, "oracle", config, ordered_json::array(), seconds);
  return kOk;
}

int cmd_strip(const CommonOptions& options, long long trajectory_id) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig config = load_config(options.config, options.overrides);
  OutputDir out(resolve_out(options, config));
  const Experiment e = materialize(config, 1);
  if (!e.generator.image_shape()) fail(ErrorKind::InvalidConfig, "strip needs an image-valued generator");
  const auto paths = static_cast<long long>(config.traversal.paths_per_seed);
  const auto total = static_cast<long long>(e.testbed.seed_points.size()) * paths;
  if (trajectory_id < 0 || trajectory_id >= total) {
    fail(ErrorKind::InvalidConfig, "--trajectory must lie in [0, " + std::to_string(total) + ")");
  }
  const MethodSpec method = e.method();
  const Trajectory t = run_one(e.testbed, method, static_cast<std::size_t>(trajectory_id / paths),
                               static_cast<std::size_t>(trajectory_id % paths),
                               fit_global_direction(e.testbed, method));
  out.write("trajectory.jsonl", trajectory_json_line(t, e.fixed_names) + "\n");
  write_strip(out, "", e, t);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(out, "strip", config, trajectory_statuses({{method.name, &t}}), seconds);
  return kOk;
}

}  // namespace

int main(const std::vector<std::string>& argv) {
  CLI::App app{"Locally optimal latent traversals that change one feature set while holding others fixed", "red"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  CommonOptions options;
  std::string methods;
  long long samples = 100000;
  long long trajectory_id = 0;

  auto add_common = [&options](CLI::App* sub) {
    sub->add_option("--config", options.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", options.out, "Output directory");
    sub->add_option("--workers", options.workers, "Worker threads (default: available parallelism)");
    sub->add_option("--override", options.overrides, "key=value override of a scalar config field");
  };
  CLI::App* run = app.add_subcommand("run", "Run the configured traversals");
  add_common(run);
  CLI::App* compare = app.add_subcommand("compare", "Compare direction-selection methods on shared seeds");
  add_common(compare);
  compare->add_option("--methods", methods, "Comma-separated methods (default: reds-lin,reds-proj,random,max-dx,min-dy)");
  CLI::App* oracle = app.add_subcommand("oracle", "Check REDs optimality against random in-nullspace sampling");
  add_common(oracle);
  oracle->add_option("--samples", samples, "Random unit vectors per seed (>= 10000)");
  CLI::App* strip = app.add_subcommand("strip", "Render one trajectory as PGM frames and a strip");
  add_common(strip);
  strip->add_option("--trajectory", trajectory_id, "Trajectory id = seed_index * paths_per_seed + path_index");

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  if (!args.empty()) args.pop_back();
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(options);
    if (*compare) return cmd_compare(options, methods);
    if (*oracle) return cmd_oracle(options, samples);
    if (*strip) return cmd_strip(options, trajectory_id);
  } catch (const Error& e) {
    return report_error(e.kind(), e.what(), options.out, exit_code_for(e.kind()));
  } catch (const std::exception& e) {
    return report_error(ErrorKind::Evaluation, e.what(), options.out, kFailure);
  }
  return kFailure;
}

}  // namespace reds::cli
