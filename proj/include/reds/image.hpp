#pragma once

#include "reds/feature_map.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace reds {

/// Row-major image with values in [0, 1]; channels interleaved per pixel.
struct ImageBuffer {
  ImageShape shape;
  std::vector<double> values;

  double at(Index x, Index y, Index c = 0) const {
    return values[static_cast<std::size_t>((y * shape.width + x) * shape.channels + c)];
  }

  static ImageBuffer from_vector(const ImageShape& shape, const Vector& flat);
};

/// Binary P5 PGM with maxval 255; values are rounded half-up after clamping
/// to [0, 1]. Multi-channel images are averaged to gray.
std::string to_pgm(const ImageBuffer& image);
void write_pgm(const std::filesystem::path& path, const ImageBuffer& image);

/// Places frames left to right. All frames must share a shape.
ImageBuffer concat_horizontal(const std::vector<ImageBuffer>& frames);

}  // namespace reds
