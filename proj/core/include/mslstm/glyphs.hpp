#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mslstm {

/// Grayscale digit images in [0, 1], each rows x cols, row-major.
struct GlyphSet {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::vector<double>> images;
  // Provenance of each image ("idx:<file>#<i>" or "proc:<seed>#<i>").
  std::vector<std::string> ids;

  std::size_t size() const { return images.size(); }
};

/// MNIST IDX image file: big-endian magic 0x00000803, count, rows, cols, then
/// count * rows * cols unsigned bytes. Pixels are scaled by 1/255.
GlyphSet read_idx(const std::filesystem::path& path);
GlyphSet parse_idx(const std::vector<std::uint8_t>& bytes, const std::string& source);

/// Thick-stroke digits 0-9 drawn from line segments with seeded jitter in
/// slant, scale, offset and stroke width. Image i shows digit i % 10.
GlyphSet procedural_glyphs(std::size_t count, std::uint64_t seed, std::size_t size = 28);

// Box-filter downscale by an integer factor that divides rows and cols.
GlyphSet downscale(const GlyphSet& glyphs, std::size_t factor);

}  // namespace mslstm
