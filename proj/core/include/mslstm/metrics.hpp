#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mslstm/tensor.hpp"

namespace mslstm {

// Frames are the batch items of a (B, c, h, w) tensor. Errors are summed over
// the pixels and channels of each frame, then averaged over frames.
double mse(const Tensor& pred, const Tensor& target);
double mae(const Tensor& pred, const Tensor& target);

struct SsimOptions {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Mean local SSIM of one h x w plane over the valid window positions.
double ssim_plane(const double* a, const double* b, std::size_t h, std::size_t w,
                  const SsimOptions& options = {});
// Average of ssim_plane over every (frame, channel) plane.
double ssim(const Tensor& a, const Tensor& b, const SsimOptions& options = {});

inline constexpr double kPsnrCap = 99.0;

// 10 log10(1 / per-pixel MSE), capped at kPsnrCap (identical inputs included).
double psnr(const Tensor& a, const Tensor& b);
double psnr_from_mean_squared_error(double mean_squared_error);

struct ContingencyTable {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  ContingencyTable& operator+=(const ContingencyTable& o);
  bool operator==(const ContingencyTable&) const = default;
};

// Both fields binarized at value >= tau.
ContingencyTable contingency(const Tensor& pred, const Tensor& obs, double tau);
// Absent when the denominator is zero.
std::optional<double> csi(const ContingencyTable& t);
std::optional<double> hss(const ContingencyTable& t);

// Synthetic precipitation: data units [0, 1] correspond to 0..10 mm/h.
inline constexpr double kMmPerHourPerUnit = 10.0;
double mm_per_hour_to_units(double rate);
std::vector<double> default_thresholds();  // 0.5, 2 and 5 mm/h in data units
std::string threshold_mapping_note();

struct FrameMetrics {
  double mse = 0.0;
  double mae = 0.0;
  double ssim = 0.0;
  double psnr = 0.0;
  std::vector<std::optional<double>> csi;  // one per threshold
  std::vector<std::optional<double>> hss;
};

struct MetricReport {
  std::vector<double> thresholds;
  std::vector<FrameMetrics> frames;  // per predicted frame
  FrameMetrics overall;
  std::size_t sequences = 0;

  // Header: frame,mse,mae,ssim,psnr[,csi_<tau>,hss_<tau>...]; the last row is
  // "all". Absent scores are empty fields.
  std::string to_csv() const;
};

/// Collects per-frame sums over any number of sequence batches.
class MetricAccumulator {
 public:
  MetricAccumulator(std::size_t frames, std::vector<double> thresholds = {});

  // pred/target: frame t of a batch of sequences, (B, c, h, w).
  void add(std::size_t t, const Tensor& pred, const Tensor& target);
  MetricReport report() const;

 private:
  struct FrameSums {
    double mse = 0.0;
    double mae = 0.0;
    double ssim = 0.0;
    double psnr = 0.0;
    std::size_t count = 0;
    std::vector<ContingencyTable> tables;
  };
  std::vector<double> thresholds_;
  std::vector<FrameSums> sums_;
};

}  // namespace mslstm
