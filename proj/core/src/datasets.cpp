#include "mslstm/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mslstm/error.hpp"
#include "mslstm/parallel.hpp"
#include "mslstm/rng.hpp"

namespace mslstm {

SequenceDataset::SequenceDataset(NdArray sequences, std::string split)
    : data_(std::move(sequences)), split_(std::move(split)) {
  if (data_.dims.size() != 5) {
    fail(ErrorCode::kFormat, "sequence dataset must be a rank-5 (N, T, c, h, w) tensor, got rank " +
                                 std::to_string(data_.dims.size()));
  }
  if (data_.element_count() != data_.data.size()) {
    fail(ErrorCode::kFormat, "sequence dataset payload does not match its dims");
  }
}

Tensor SequenceDataset::frame_batch(std::span<const std::size_t> sequences, std::size_t t) const {
  if (t >= frames()) {
    fail(ErrorCode::kUsage, "frame index " + std::to_string(t) + " out of range");
  }
  const std::size_t frame_size = channels() * height() * width();
  std::vector<double> out;
  out.reserve(sequences.size() * frame_size);
  for (std::size_t s : sequences) {
    if (s >= count()) fail(ErrorCode::kUsage, "sequence index " + std::to_string(s) + " out of range");
    const auto first = data_.data.begin() + static_cast<std::ptrdiff_t>((s * frames() + t) * frame_size);
    out.insert(out.end(), first, first + static_cast<std::ptrdiff_t>(frame_size));
  }
  return Tensor(Shape{sequences.size(), channels(), height(), width()}, std::move(out));
}

Tensor SequenceDataset::frame(std::size_t sequence, std::size_t t) const {
  const std::size_t idx[1] = {sequence};
  return frame_batch(idx, t);
}

void SequenceDataset::save(const std::filesystem::path& path, DType dtype) const {
  write_tensor(path, data_, dtype);
}

SequenceDataset SequenceDataset::load(const std::filesystem::path& path, const std::string& split) {
  NdArray a = read_tensor(path);
  for (double v : a.data) {
    if (!(v >= 0.0 && v <= 1.0)) {
      fail(ErrorCode::kFormat, path.string() + ": dataset values must lie in [0, 1]");
    }
  }
  try {
    return SequenceDataset(std::move(a), split);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void MovingSpec::validate() const {
  if (count == 0) fail(ErrorCode::kUsage, "dataset count must be positive");
  if (digits_per_frame == 0) fail(ErrorCode::kConfig, "digits_per_frame must be positive");
  if (frames < 2) fail(ErrorCode::kConfig, "sequences need at least 2 frames");
  if (glyph_size == 0 || glyph_size >= canvas) {
    fail(ErrorCode::kConfig, "glyph size " + std::to_string(glyph_size) +
                                 " must be smaller than the canvas " + std::to_string(canvas));
  }
  if (!(speed_min > 0.0) || speed_max < speed_min) {
    fail(ErrorCode::kConfig, "speed range must satisfy 0 < min <= max");
  }
  if (speed_max > static_cast<double>(canvas - glyph_size)) {
    fail(ErrorCode::kConfig, "speed_max exceeds the free travel range of the canvas");
  }
}

void advance_axis(AxisMotion& m, double limit) {
  m.position += m.velocity;
  if (m.position < 0.0) {
    m.position = -m.position;
    m.velocity = -m.velocity;
  } else if (m.position > limit) {
    m.position = 2.0 * limit - m.position;
    m.velocity = -m.velocity;
  }
}

std::vector<DigitTrack> sample_tracks(const MovingSpec& spec, std::size_t glyph_count,
                                      std::size_t glyph_rows, std::size_t glyph_cols,
                                      std::size_t index) {
  if (glyph_count == 0) fail(ErrorCode::kUsage, "no glyphs available");
  Rng rng(derive_seed(spec.seed, index));
  const double lim_x = static_cast<double>(spec.canvas - glyph_cols);
  const double lim_y = static_cast<double>(spec.canvas - glyph_rows);
  std::vector<DigitTrack> tracks;
  for (std::size_t d = 0; d < spec.digits_per_frame; ++d) {
    DigitTrack track;
    track.glyph = static_cast<std::size_t>(rng.below(glyph_count));
    AxisMotion mx{rng.uniform(0.0, lim_x), 0.0};
    AxisMotion my{rng.uniform(0.0, lim_y), 0.0};
    const double speed = rng.uniform(spec.speed_min, spec.speed_max);
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    mx.velocity = speed * std::cos(angle);
    my.velocity = speed * std::sin(angle);
    for (std::size_t t = 0; t < spec.frames; ++t) {
      track.x.push_back(mx.position);
      track.y.push_back(my.position);
      advance_axis(mx, lim_x);
      advance_axis(my, lim_y);
    }
    tracks.push_back(std::move(track));
  }
  return tracks;
}

GlyphSet prepare_glyphs(const MovingSpec& spec, const GlyphSet& source) {
  if (source.rows == spec.glyph_size && source.cols == spec.glyph_size) return source;
  if (source.rows % spec.glyph_size != 0 || source.rows != source.cols) {
    fail(ErrorCode::kConfig, "cannot scale " + std::to_string(source.rows) + "x" +
                                 std::to_string(source.cols) + " glyphs to " +
                                 std::to_string(spec.glyph_size));
  }
  return downscale(source, source.rows / spec.glyph_size);
}

SequenceDataset generate_moving(const MovingSpec& spec, const GlyphSet& glyphs,
                                const std::string& split) {
  spec.validate();
  if (glyphs.size() == 0) fail(ErrorCode::kIo, "no glyph source available");
  if (glyphs.rows != spec.glyph_size || glyphs.cols != spec.glyph_size) {
    fail(ErrorCode::kConfig, "glyphs are " + std::to_string(glyphs.rows) + "x" +
                                 std::to_string(glyphs.cols) + ", spec wants " +
                                 std::to_string(spec.glyph_size));
  }
  const std::size_t c = spec.canvas;
  const std::size_t frame_size = c * c;
  NdArray a;
  a.dims = {spec.count, spec.frames, 1, c, c};
  a.data.assign(spec.count * spec.frames * frame_size, 0.0);
  std::vector<std::vector<std::size_t>> used(spec.count);
  parallel_for(spec.count, [&](std::size_t s) {
    const auto tracks = sample_tracks(spec, glyphs.size(), glyphs.rows, glyphs.cols, s);
    for (const DigitTrack& track : tracks) {
      used[s].push_back(track.glyph);
      const auto& img = glyphs.images[track.glyph];
      for (std::size_t t = 0; t < spec.frames; ++t) {
        double* frame = a.data.data() + (s * spec.frames + t) * frame_size;
        const auto ox = static_cast<std::size_t>(std::lround(track.x[t]));
        const auto oy = static_cast<std::size_t>(std::lround(track.y[t]));
        for (std::size_t r = 0; r < glyphs.rows; ++r) {
          for (std::size_t col = 0; col < glyphs.cols; ++col) {
            double& px = frame[(oy + r) * c + ox + col];
            px = std::max(px, img[r * glyphs.cols + col]);
          }
        }
      }
    }
  });
  SequenceDataset ds(std::move(a), split);
  std::set<std::string> ids;
  for (const auto& list : used) {
    for (std::size_t g : list) ids.insert(glyphs.ids.empty() ? std::to_string(g) : glyphs.ids[g]);
  }
  ds.sources.assign(ids.begin(), ids.end());
  return ds;
}

void AdvectionSpec::validate() const {
  if (count == 0) fail(ErrorCode::kUsage, "dataset count must be positive");
  if (frames < 2) fail(ErrorCode::kConfig, "sequences need at least 2 frames");
  if (canvas < 2) fail(ErrorCode::kConfig, "canvas too small");
  if (amplitude_min < 0.0 || amplitude_max < amplitude_min) {
    fail(ErrorCode::kConfig, "amplitudes must satisfy 0 <= min <= max");
  }
  if (!(radius_min > 0.0) || radius_max < radius_min) {
    fail(ErrorCode::kConfig, "radii must satisfy 0 < min <= max");
  }
  if (speed_min < 0.0 || speed_max < speed_min || speed_max > static_cast<double>(canvas - 1)) {
    fail(ErrorCode::kConfig, "invalid blob speed range");
  }
}

Tensor render_blobs(std::vector<Blob> blobs, std::size_t canvas, std::size_t frames) {
  Tensor out(Shape{frames, 1, canvas, canvas});
  const double limit = static_cast<double>(canvas - 1);
  for (std::size_t t = 0; t < frames; ++t) {
    double* frame = out.plane(t, 0);
    for (const Blob& b : blobs) {
      const double inv = 1.0 / (2.0 * b.radius * b.radius);
      for (std::size_t r = 0; r < canvas; ++r) {
        const double dy = static_cast<double>(r) - b.y;
        for (std::size_t c = 0; c < canvas; ++c) {
          const double dx = static_cast<double>(c) - b.x;
          frame[r * canvas + c] += b.amplitude * std::exp(-(dx * dx + dy * dy) * inv);
        }
      }
    }
    for (std::size_t i = 0; i < canvas * canvas; ++i) frame[i] = std::clamp(frame[i], 0.0, 1.0);
    for (Blob& b : blobs) {
      AxisMotion mx{b.x, b.vx};
      AxisMotion my{b.y, b.vy};
      advance_axis(mx, limit);
      advance_axis(my, limit);
      b.x = mx.position;
      b.vx = mx.velocity;
      b.y = my.position;
      b.vy = my.velocity;
    }
  }
  return out;
}

SequenceDataset generate_advection(const AdvectionSpec& spec, const std::string& split) {
  spec.validate();
  const std::size_t c = spec.canvas;
  const std::size_t seq_size = spec.frames * c * c;
  NdArray a;
  a.dims = {spec.count, spec.frames, 1, c, c};
  a.data.resize(spec.count * seq_size);
  parallel_for(spec.count, [&](std::size_t s) {
    Rng rng(derive_seed(spec.seed, s));
    std::vector<Blob> blobs;
    for (std::size_t i = 0; i < spec.blobs; ++i) {
      Blob b;
      b.amplitude = rng.uniform(spec.amplitude_min, spec.amplitude_max);
      b.radius = rng.uniform(spec.radius_min, spec.radius_max);
      b.x = rng.uniform(0.0, static_cast<double>(c - 1));
      b.y = rng.uniform(0.0, static_cast<double>(c - 1));
      const double speed = rng.uniform(spec.speed_min, spec.speed_max);
      const double angle = rng.uniform(0.0, 2.0 * M_PI);
      b.vx = speed * std::cos(angle);
      b.vy = speed * std::sin(angle);
      blobs.push_back(b);
    }
    const Tensor frames = render_blobs(std::move(blobs), c, spec.frames);
    std::copy(frames.data().begin(), frames.data().end(),
              a.data.begin() + static_cast<std::ptrdiff_t>(s * seq_size));
  });
  return SequenceDataset(std::move(a), split);
}

}  // namespace mslstm
