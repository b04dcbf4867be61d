#include "mslstm/glyphs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "mslstm/error.hpp"
#include "mslstm/rng.hpp"
#include "mslstm/tensor_file.hpp"

namespace mslstm {
namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

struct Point {
  double x;
  double y;
};
using Stroke = std::vector<Point>;

// Strokes in a unit box, x to the right, y downwards.
const std::array<std::vector<Stroke>, 10>& digit_strokes() {
  static const std::array<std::vector<Stroke>, 10> strokes = [] {
    std::array<std::vector<Stroke>, 10> s;
    Stroke ring;
    for (int i = 0; i <= 16; ++i) {
      const double a = 2.0 * M_PI * i / 16.0;
      ring.push_back({0.5 + 0.42 * std::sin(a), 0.5 - 0.48 * std::cos(a)});
    }
    s[0] = {ring};
    s[1] = {{{0.3, 0.2}, {0.55, 0.0}, {0.55, 1.0}}};
    s[2] = {{{0.1, 0.25}, {0.3, 0.02}, {0.7, 0.02}, {0.9, 0.25}, {0.85, 0.45}, {0.1, 1.0}, {0.92, 1.0}}};
    s[3] = {{{0.1, 0.05}, {0.8, 0.05}, {0.9, 0.25}, {0.75, 0.45}, {0.4, 0.5}},
            {{0.75, 0.5}, {0.92, 0.75}, {0.8, 0.95}, {0.1, 0.95}}};
    s[4] = {{{0.7, 1.0}, {0.7, 0.0}, {0.05, 0.7}, {0.95, 0.7}}};
    s[5] = {{{0.9, 0.0}, {0.15, 0.0}, {0.1, 0.45}, {0.7, 0.42}, {0.92, 0.65}, {0.8, 0.92}, {0.1, 0.97}}};
    s[6] = {{{0.8, 0.02}, {0.3, 0.2}, {0.1, 0.6}, {0.2, 0.95}, {0.7, 0.97}, {0.9, 0.75},
             {0.75, 0.52}, {0.3, 0.5}, {0.12, 0.65}}};
    s[7] = {{{0.05, 0.0}, {0.95, 0.0}, {0.4, 1.0}}};
    Stroke top, bottom;
    for (int i = 0; i <= 12; ++i) {
      const double a = 2.0 * M_PI * i / 12.0;
      top.push_back({0.5 + 0.33 * std::sin(a), 0.25 - 0.24 * std::cos(a)});
      bottom.push_back({0.5 + 0.42 * std::sin(a), 0.74 - 0.25 * std::cos(a)});
    }
    s[8] = {top, bottom};
    s[9] = {{{0.88, 0.35}, {0.6, 0.5}, {0.2, 0.45}, {0.1, 0.22}, {0.35, 0.02}, {0.75, 0.05},
             {0.9, 0.3}, {0.8, 0.7}, {0.4, 1.0}}};
    return s;
  }();
  return strokes;
}

double segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = a.x + t * dx - p.x;
  const double ey = a.y + t * dy - p.y;
  return std::sqrt(ex * ex + ey * ey);
}

}  // namespace

GlyphSet parse_idx(const std::vector<std::uint8_t>& bytes, const std::string& source) {
  if (bytes.size() < 16) {
    fail(ErrorCode::kIo, source + ": truncated IDX header: expected 16 bytes, got " +
                             std::to_string(bytes.size()));
  }
  const std::uint32_t magic = be32(bytes.data());
  if (magic != kIdxImageMagic) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "bad IDX magic 0x%08X, expected 0x%08X", magic, kIdxImageMagic);
    fail(ErrorCode::kFormat, source + ": " + buf);
  }
  const std::size_t count = be32(bytes.data() + 4);
  const std::size_t rows = be32(bytes.data() + 8);
  const std::size_t cols = be32(bytes.data() + 12);
  const std::size_t need = 16 + count * rows * cols;
  if (bytes.size() < need) {
    fail(ErrorCode::kIo, source + ": truncated IDX payload: expected " + std::to_string(need) +
                             " bytes, got " + std::to_string(bytes.size()));
  }
  GlyphSet g;
  g.rows = rows;
  g.cols = cols;
  const std::uint8_t* p = bytes.data() + 16;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> img(rows * cols);
    for (double& v : img) v = static_cast<double>(*p++) / 255.0;
    g.images.push_back(std::move(img));
    g.ids.push_back("idx:" + source + "#" + std::to_string(i));
  }
  return g;
}

GlyphSet read_idx(const std::filesystem::path& path) {
  return parse_idx(read_file_bytes(path), path.filename().string());
}

GlyphSet procedural_glyphs(std::size_t count, std::uint64_t seed, std::size_t size) {
  GlyphSet g;
  g.rows = size;
  g.cols = size;
  const double px = static_cast<double>(size);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, i));
    const auto& strokes = digit_strokes()[i % 10];
    const double height = px * rng.uniform(0.62, 0.75);
    const double width = height * rng.uniform(0.5, 0.7);
    const double slant = rng.uniform(-0.25, 0.25);
    const double thick = px * rng.uniform(0.055, 0.09);
    const double ox = (px - width) / 2.0 + rng.uniform(-1.0, 1.0);
    const double oy = (px - height) / 2.0 + rng.uniform(-1.0, 1.0);
    std::vector<Stroke> placed;
    for (const Stroke& s : strokes) {
      Stroke t;
      for (const Point& p : s) {
        const double y = oy + p.y * height;
        t.push_back({ox + p.x * width + slant * (oy + height / 2.0 - y), y});
      }
      placed.push_back(std::move(t));
    }
    std::vector<double> img(size * size);
    for (std::size_t r = 0; r < size; ++r) {
      for (std::size_t c = 0; c < size; ++c) {
        const Point p{static_cast<double>(c) + 0.5, static_cast<double>(r) + 0.5};
        double d = 1e9;
        for (const Stroke& s : placed) {
          for (std::size_t k = 0; k + 1 < s.size(); ++k) d = std::min(d, segment_distance(p, s[k], s[k + 1]));
        }
        img[r * size + c] = std::clamp(thick + 0.5 - d, 0.0, 1.0);
      }
    }
    g.images.push_back(std::move(img));
    g.ids.push_back("proc:" + std::to_string(seed) + "#" + std::to_string(i));
  }
  return g;
}

GlyphSet downscale(const GlyphSet& glyphs, std::size_t factor) {
  if (factor == 0 || glyphs.rows % factor != 0 || glyphs.cols % factor != 0) {
    fail(ErrorCode::kConfig, "glyph downscale factor " + std::to_string(factor) +
                                 " does not divide " + std::to_string(glyphs.rows) + "x" +
                                 std::to_string(glyphs.cols));
  }
  if (factor == 1) return glyphs;
  GlyphSet out;
  out.rows = glyphs.rows / factor;
  out.cols = glyphs.cols / factor;
  out.ids = glyphs.ids;
  const double norm = 1.0 / static_cast<double>(factor * factor);
  for (const auto& img : glyphs.images) {
    std::vector<double> small(out.rows * out.cols, 0.0);
    for (std::size_t r = 0; r < glyphs.rows; ++r) {
      for (std::size_t c = 0; c < glyphs.cols; ++c) {
        small[(r / factor) * out.cols + c / factor] += img[r * glyphs.cols + c] * norm;
      }
    }
    out.images.push_back(std::move(small));
  }
  return out;
}

}  // namespace mslstm
