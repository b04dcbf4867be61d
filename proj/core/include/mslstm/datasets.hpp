#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mslstm/glyphs.hpp"
#include "mslstm/tensor.hpp"
#include "mslstm/tensor_file.hpp"

namespace mslstm {

/// N sequences of T frames, stored as a rank-5 (N, T, c, h, w) array in [0, 1].
class SequenceDataset {
 public:
  SequenceDataset() = default;
  SequenceDataset(NdArray sequences, std::string split);

  std::size_t count() const { return dim(0); }
  std::size_t frames() const { return dim(1); }
  std::size_t channels() const { return dim(2); }
  std::size_t height() const { return dim(3); }
  std::size_t width() const { return dim(4); }

  const NdArray& array() const { return data_; }
  const std::string& split() const { return split_; }

  // Frame t of each listed sequence, stacked into (B, c, h, w).
  Tensor frame_batch(std::span<const std::size_t> sequences, std::size_t t) const;
  Tensor frame(std::size_t sequence, std::size_t t) const;

  // Glyph provenance ids used to draw the sequences (empty when not applicable).
  std::vector<std::string> sources;

  void save(const std::filesystem::path& path, DType dtype = DType::kF32) const;
  static SequenceDataset load(const std::filesystem::path& path, const std::string& split);

 private:
  std::size_t dim(std::size_t i) const {
    return data_.dims.size() == 5 ? static_cast<std::size_t>(data_.dims[i]) : 0;
  }

  NdArray data_;
  std::string split_;
};

struct MovingSpec {
  std::size_t count = 1000;
  std::size_t digits_per_frame = 2;
  std::size_t frames = 20;
  std::size_t canvas = 64;
  std::size_t glyph_size = 28;  // glyphs are box-downscaled from 28 when smaller
  double speed_min = 2.0;       // pixels per frame
  double speed_max = 5.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Position and velocity of one digit's top-left corner along a single axis
/// in [0, limit], reflected elastically at both ends.
struct AxisMotion {
  double position = 0.0;
  double velocity = 0.0;
};

void advance_axis(AxisMotion& m, double limit);

struct DigitTrack {
  std::size_t glyph = 0;
  // Top-left corner per frame (real-valued; rendered at the rounded offset).
  std::vector<double> x;
  std::vector<double> y;
};

/// Tracks of sequence `index`; depends only on (spec, glyph count, index).
std::vector<DigitTrack> sample_tracks(const MovingSpec& spec, std::size_t glyph_count,
                                      std::size_t glyph_rows, std::size_t glyph_cols,
                                      std::size_t index);

/// Bouncing digits composited by elementwise max. `glyphs` must already be at
/// spec.glyph_size (see prepare_glyphs).
SequenceDataset generate_moving(const MovingSpec& spec, const GlyphSet& glyphs,
                                const std::string& split);

// Downscales 28x28 sources to spec.glyph_size.
GlyphSet prepare_glyphs(const MovingSpec& spec, const GlyphSet& source);

struct Blob {
  double x = 0.0;  // centre column
  double y = 0.0;  // centre row
  double vx = 0.0;
  double vy = 0.0;
  double amplitude = 1.0;
  double radius = 3.0;  // Gaussian sigma in pixels
};

struct AdvectionSpec {
  std::size_t count = 1000;
  std::size_t blobs = 3;
  std::size_t frames = 20;
  std::size_t canvas = 64;
  double amplitude_min = 0.3;
  double amplitude_max = 1.0;
  double radius_min = 2.0;
  double radius_max = 6.0;
  double speed_min = 0.5;
  double speed_max = 2.5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Frames (T, 1, canvas, canvas) of Gaussian bumps moving at constant
/// velocity, centres reflected at the canvas border, values clipped to [0, 1].
Tensor render_blobs(std::vector<Blob> blobs, std::size_t canvas, std::size_t frames);

SequenceDataset generate_advection(const AdvectionSpec& spec, const std::string& split);

}  // namespace mslstm
