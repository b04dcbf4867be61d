#include "mslstm/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mslstm/error.hpp"
#include "mslstm/tensor_file.hpp"

namespace mslstm {

std::vector<std::uint8_t> encode_pgm(const GrayImage& image) {
  if (image.pixels.size() != image.width * image.height) {
    fail(ErrorCode::kShape, "pgm: pixel count does not match " + std::to_string(image.width) + "x" +
                                std::to_string(image.height));
  }
  const std::string header =
      "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  write_file_bytes(path, encode_pgm(image));
}

GrayImage normalize_to_gray(const std::vector<double>& values, std::size_t width,
                            std::size_t height) {
  if (values.size() != width * height) fail(ErrorCode::kShape, "image size mismatch");
  GrayImage img{width, height, std::vector<std::uint8_t>(values.size(), 128)};
  if (values.empty()) return img;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return img;
  for (std::size_t i = 0; i < values.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * (values[i] - *lo) / range));
  }
  return img;
}

std::vector<double> channel_mean(const Tensor& t, std::size_t b) {
  const Shape& s = t.shape();
  std::vector<double> out(s.plane(), 0.0);
  for (std::size_t c = 0; c < s.c; ++c) {
    const double* p = t.plane(b, c);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += p[i];
  }
  for (double& v : out) v /= static_cast<double>(s.c);
  return out;
}

GrayImage unit_to_gray(const Tensor& t, std::size_t b, std::size_t c) {
  const Shape& s = t.shape();
  GrayImage img{s.w, s.h, std::vector<std::uint8_t>(s.plane())};
  const double* p = t.plane(b, c);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(p[i], 0.0, 1.0)));
  }
  return img;
}

}  // namespace mslstm
