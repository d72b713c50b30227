#include "reds/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace reds {

ImageBuffer ImageBuffer::from_vector(const ImageShape& shape, const Vector& flat) {
  if (flat.size() != shape.size()) fail(ErrorKind::InvalidInput, "image vector length mismatch");
  ImageBuffer image;
  image.shape = shape;
  image.values.assign(flat.data(), flat.data() + flat.size());
  return image;
}

std::string to_pgm(const ImageBuffer& image) {
  const auto& s = image.shape;
  std::string out = "P5\n" + std::to_string(s.width) + " " + std::to_string(s.height) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(s.width * s.height));
  for (Index y = 0; y < s.height; ++y) {
    for (Index x = 0; x < s.width; ++x) {
      double sum = 0.0;
      for (Index c = 0; c < s.channels; ++c) sum += image.at(x, y, c);
      const double v = std::clamp(sum / static_cast<double>(s.channels), 0.0, 1.0);
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::floor(v * 255.0 + 0.5))));
    }
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const ImageBuffer& image) {
  std::ofstream file(path, std::ios::binary);
  if (!file) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  const std::string bytes = to_pgm(image);
  file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!file) fail(ErrorKind::Io, "failed writing " + path.string());
}

ImageBuffer concat_horizontal(const std::vector<ImageBuffer>& frames) {
  if (frames.empty()) fail(ErrorKind::InvalidInput, "no frames to concatenate");
  const ImageShape frame = frames.front().shape;
  ImageBuffer strip;
  strip.shape = {frame.width * static_cast<Index>(frames.size()), frame.height, frame.channels};
  strip.values.resize(static_cast<std::size_t>(strip.shape.size()));
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (!(frames[f].shape == frame)) fail(ErrorKind::InvalidInput, "frames differ in shape");
    for (Index y = 0; y < frame.height; ++y) {
      for (Index x = 0; x < frame.width; ++x) {
        for (Index c = 0; c < frame.channels; ++c) {
          const Index sx = static_cast<Index>(f) * frame.width + x;
          strip.values[static_cast<std::size_t>((y * strip.shape.width + sx) * frame.channels + c)] =
              frames[f].at(x, y, c);
        }
      }
    }
  }
  return strip;
}

}  // namespace reds
