#pragma once

// Serialization of run outputs: trajectories.jsonl, CSV tables, the SVG
// comparison chart and the checksummed manifest.

#include "reds/eval.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace reds {

/// printf("%.17g"), the round-trip format used in every output file.
std::string format_double(double v);

std::string sha256_hex(std::string_view bytes);

/// One JSON object, no trailing newline. Fields appear in a fixed order.
std::string trajectory_json_line(const Trajectory& t, const std::vector<std::string>& fixed_names);

/// method, step, mean_sq_dy_<name>..., mean_sq_dx, count
std::string summary_csv(const std::vector<std::pair<std::string, std::vector<StepAggregate>>>& methods,
                        const std::vector<std::string>& fixed_names);

/// summary columns plus log10 columns, one block per method.
std::string comparison_csv(const ComparisonReport& report, const std::vector<std::string>& fixed_names);

std::string dominance_csv(const ComparisonReport& report);

/// Log-log chart of changing gain (y) against summed fixed drift (x), one
/// polyline per method.
std::string comparison_svg(const ComparisonReport& report);

struct FileEntry {
  std::string path;  ///< relative to the output directory
  std::uintmax_t bytes = 0;
  std::string sha256;
};

/// Single writer for an output directory; remembers every file it wrote.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  void write(const std::string& relative, std::string_view bytes);
  const std::vector<FileEntry>& files() const { return files_; }

 private:
  std::filesystem::path root_;
  std::vector<FileEntry> files_;
};

}  // namespace reds
