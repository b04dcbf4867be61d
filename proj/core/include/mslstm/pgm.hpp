#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mslstm/tensor.hpp"

namespace mslstm {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

// "P5\n{w} {h}\n255\n" followed by w * h bytes.
std::vector<std::uint8_t> encode_pgm(const GrayImage& image);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

/// Min-max normalization to 0..255; a constant image becomes mid-gray (128).
GrayImage normalize_to_gray(const std::vector<double>& values, std::size_t width,
                            std::size_t height);

// Mean over channels of batch item b.
std::vector<double> channel_mean(const Tensor& t, std::size_t b = 0);

// Values assumed in [0, 1], clipped and scaled by 255 without normalization.
GrayImage unit_to_gray(const Tensor& t, std::size_t b = 0, std::size_t c = 0);

}  // namespace mslstm
