#include "mslstm/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "mslstm/error.hpp"

namespace mslstm {
namespace {

std::size_t frame_size(const Shape& s) { return s.c * s.h * s.w; }

template <typename F>
double mean_frame_sum(const Tensor& pred, const Tensor& target, const char* op, F term) {
  require_same_shape(pred, target, op);
  const Shape& s = pred.shape();
  if (s.b == 0) return 0.0;
  const std::size_t fs = frame_size(s);
  const auto p = pred.data();
  const auto q = target.data();
  double total = 0.0;
  for (std::size_t b = 0; b < s.b; ++b) {
    double frame = 0.0;
    for (std::size_t i = b * fs; i < (b + 1) * fs; ++i) frame += term(p[i] - q[i]);
    total += frame;
  }
  return total / static_cast<double>(s.b);
}

std::vector<double> gaussian_window(const SsimOptions& o) {
  std::vector<double> g(o.window);
  const double centre = (static_cast<double>(o.window) - 1.0) / 2.0;
  double total = 0.0;
  for (std::size_t i = 0; i < o.window; ++i) {
    const double d = static_cast<double>(i) - centre;
    g[i] = std::exp(-d * d / (2.0 * o.sigma * o.sigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// Separable valid-mode filtering of one plane.
std::vector<double> filter_valid(const std::vector<double>& x, std::size_t h, std::size_t w,
                                 const std::vector<double>& g) {
  const std::size_t k = g.size();
  const std::size_t ow = w - k + 1;
  const std::size_t oh = h - k + 1;
  std::vector<double> rows(h * ow);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += g[j] * x[r * w + c + j];
      rows[r * ow + c] = acc;
    }
  }
  std::vector<double> out(oh * ow);
  for (std::size_t r = 0; r < oh; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < k; ++i) acc += g[i] * rows[(r + i) * ow + c];
      out[r * ow + c] = acc;
    }
  }
  return out;
}

std::string format_score(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", *v);
  return buf;
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

double mse(const Tensor& pred, const Tensor& target) {
  return mean_frame_sum(pred, target, "mse", [](double e) { return e * e; });
}

double mae(const Tensor& pred, const Tensor& target) {
  return mean_frame_sum(pred, target, "mae", [](double e) { return std::abs(e); });
}

double ssim_plane(const double* a, const double* b, std::size_t h, std::size_t w,
                  const SsimOptions& o) {
  if (h < o.window || w < o.window) {
    fail(ErrorCode::kConfig, "ssim needs frames of at least " + std::to_string(o.window) + "x" +
                                 std::to_string(o.window) + ", got " + std::to_string(h) + "x" +
                                 std::to_string(w));
  }
  const std::size_t n = h * w;
  std::vector<double> x(a, a + n), y(b, b + n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto g = gaussian_window(o);
  const auto mx = filter_valid(x, h, w, g);
  const auto my = filter_valid(y, h, w, g);
  const auto sxx = filter_valid(xx, h, w, g);
  const auto syy = filter_valid(yy, h, w, g);
  const auto sxy = filter_valid(xy, h, w, g);
  const double c1 = (o.k1 * o.data_range) * (o.k1 * o.data_range);
  const double c2 = (o.k2 * o.data_range) * (o.k2 * o.data_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

double ssim(const Tensor& a, const Tensor& b, const SsimOptions& options) {
  require_same_shape(a, b, "ssim");
  const Shape& s = a.shape();
  double total = 0.0;
  for (std::size_t i = 0; i < s.b; ++i) {
    for (std::size_t c = 0; c < s.c; ++c) {
      total += ssim_plane(a.plane(i, c), b.plane(i, c), s.h, s.w, options);
    }
  }
  return s.b * s.c == 0 ? 0.0 : total / static_cast<double>(s.b * s.c);
}

double psnr_from_mean_squared_error(double mean_squared_error) {
  if (mean_squared_error <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mean_squared_error));
}

double psnr(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "psnr");
  if (a.size() == 0) return kPsnrCap;
  double total = 0.0;
  const auto p = a.data();
  const auto q = b.data();
  for (std::size_t i = 0; i < p.size(); ++i) total += (p[i] - q[i]) * (p[i] - q[i]);
  return psnr_from_mean_squared_error(total / static_cast<double>(a.size()));
}

ContingencyTable& ContingencyTable::operator+=(const ContingencyTable& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

ContingencyTable contingency(const Tensor& pred, const Tensor& obs, double tau) {
  require_same_shape(pred, obs, "contingency");
  ContingencyTable t;
  const auto p = pred.data();
  const auto o = obs.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool yp = p[i] >= tau;
    const bool yo = o[i] >= tau;
    if (yp && yo) ++t.tp;
    else if (yp) ++t.fp;
    else if (yo) ++t.fn;
    else ++t.tn;
  }
  return t;
}

std::optional<double> csi(const ContingencyTable& t) {
  const std::size_t den = t.tp + t.fn + t.fp;
  if (den == 0) return std::nullopt;
  return static_cast<double>(t.tp) / static_cast<double>(den);
}

std::optional<double> hss(const ContingencyTable& t) {
  const double tp = static_cast<double>(t.tp), fp = static_cast<double>(t.fp);
  const double fn = static_cast<double>(t.fn), tn = static_cast<double>(t.tn);
  const double den = (tp + fn) * (fn + tn) + (tp + fp) * (fp + tn);
  if (den == 0.0) return std::nullopt;
  return 2.0 * (tp * tn - fn * fp) / den;
}

double mm_per_hour_to_units(double rate) { return rate / kMmPerHourPerUnit; }

std::vector<double> default_thresholds() {
  return {mm_per_hour_to_units(0.5), mm_per_hour_to_units(2.0), mm_per_hour_to_units(5.0)};
}

std::string threshold_mapping_note() {
  return "thresholds: data value 1.0 = 10 mm/h (0.5, 2, 5 mm/h -> 0.05, 0.2, 0.5)";
}

std::string MetricReport::to_csv() const {
  std::string out = "frame,mse,mae,ssim,psnr";
  for (double tau : thresholds) {
    const std::string t = format_value(tau);
    out += ",csi_" + t + ",hss_" + t;
  }
  out += '\n';
  auto row = [&](const std::string& label, const FrameMetrics& f) {
    out += label + ',' + format_value(f.mse) + ',' + format_value(f.mae) + ',' +
           format_value(f.ssim) + ',' + format_value(f.psnr);
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      out += ',' + format_score(f.csi[i]) + ',' + format_score(f.hss[i]);
    }
    out += '\n';
  };
  for (std::size_t t = 0; t < frames.size(); ++t) row(std::to_string(t), frames[t]);
  row("all", overall);
  return out;
}

MetricAccumulator::MetricAccumulator(std::size_t frames, std::vector<double> thresholds)
    : thresholds_(std::move(thresholds)), sums_(frames) {
  for (auto& s : sums_) s.tables.resize(thresholds_.size());
}

void MetricAccumulator::add(std::size_t t, const Tensor& pred, const Tensor& target) {
  if (t >= sums_.size()) fail(ErrorCode::kUsage, "metric frame index out of range");
  require_same_shape(pred, target, "metrics");
  FrameSums& s = sums_[t];
  const std::size_t b = pred.shape().b;
  for (std::size_t i = 0; i < b; ++i) {
    const Tensor p = slice_batch(pred, i, 1);
    const Tensor q = slice_batch(target, i, 1);
    s.mse += mse(p, q);
    s.mae += mae(p, q);
    s.ssim += ssim(p, q);
    s.psnr += psnr(p, q);
  }
  s.count += b;
  for (std::size_t k = 0; k < thresholds_.size(); ++k) {
    s.tables[k] += contingency(pred, target, thresholds_[k]);
  }
}

MetricReport MetricAccumulator::report() const {
  MetricReport r;
  r.thresholds = thresholds_;
  r.sequences = sums_.empty() ? 0 : sums_.front().count;
  std::vector<ContingencyTable> pooled(thresholds_.size());
  for (const FrameSums& s : sums_) {
    FrameMetrics f;
    const double n = s.count == 0 ? 1.0 : static_cast<double>(s.count);
    f.mse = s.mse / n;
    f.mae = s.mae / n;
    f.ssim = s.ssim / n;
    f.psnr = s.psnr / n;
    for (std::size_t k = 0; k < thresholds_.size(); ++k) {
      f.csi.push_back(csi(s.tables[k]));
      f.hss.push_back(hss(s.tables[k]));
      pooled[k] += s.tables[k];
    }
    r.overall.mse += f.mse;
    r.overall.mae += f.mae;
    r.overall.ssim += f.ssim;
    r.overall.psnr += f.psnr;
    r.frames.push_back(std::move(f));
  }
  if (!r.frames.empty()) {
    const double n = static_cast<double>(r.frames.size());
    r.overall.mse /= n;
    r.overall.mae /= n;
    r.overall.ssim /= n;
    r.overall.psnr /= n;
  }
  for (const ContingencyTable& t : pooled) {
    r.overall.csi.push_back(csi(t));
    r.overall.hss.push_back(hss(t));
  }
  return r;
}

}  // namespace mslstm
