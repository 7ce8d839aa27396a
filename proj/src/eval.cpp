#include "cpi/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cpi/errors.hpp"

namespace cpi {

double psnr(const Frame& a, const Frame& b, const HoleMask* region) {
  if (!a.same_shape(b)) throw InvalidArgument("psnr: frames differ in shape");
  if (region && (region->height() != a.height() || region->width() != a.width())) {
    throw InvalidArgument("psnr: region shape mismatch");
  }
  double sse = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      if (region && !region->at(y, x)) continue;
      for (int c = 0; c < 3; ++c) {
        const double d = a.at(y, x, c) - b.at(y, x, c);
        sse += d * d;
      }
      count += 3;
    }
  if (count == 0) throw InvalidArgument("psnr: empty region");
  const double mse = sse / static_cast<double>(count);
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Frame& a, const Frame& b) {
  if (!a.same_shape(b)) throw InvalidArgument("ssim: frames differ in shape");
  constexpr int kWin = 11;
  if (a.height() < kWin || a.width() < kWin) throw InvalidArgument("ssim: image smaller than 11x11");
  double g[kWin][kWin];
  double gsum = 0.0;
  for (int i = 0; i < kWin; ++i)
    for (int j = 0; j < kWin; ++j) {
      const double di = i - 5, dj = j - 5;
      g[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * 1.5 * 1.5));
      gsum += g[i][j];
    }
  for (auto& row : g)
    for (double& v : row) v /= gsum;
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  const int oh = a.height() - kWin + 1;
  const int ow = a.width() - kWin + 1;
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    double acc = 0.0;
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
        for (int i = 0; i < kWin; ++i)
          for (int j = 0; j < kWin; ++j) {
            const double va = a.at(y + i, x + j, c);
            const double vb = b.at(y + i, x + j, c);
            const double w = g[i][j];
            ma += w * va;
            mb += w * vb;
            saa += w * va * va;
            sbb += w * vb * vb;
            sab += w * va * vb;
          }
        const double var_a = saa - ma * ma;
        const double var_b = sbb - mb * mb;
        const double cov = sab - ma * mb;
        acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
      }
    total += acc / (static_cast<double>(oh) * ow);
  }
  return total / 3.0;
}

Image temporal_profile(const VideoClip& clip, int row) {
  clip.validate();
  if (row < 0 || row >= clip.height()) throw InvalidArgument("temporal_profile: row out of range");
  Image out(static_cast<int>(clip.size()), clip.width(), 3);
  for (std::size_t t = 0; t < clip.size(); ++t)
    for (int x = 0; x < clip.width(); ++x)
      for (int c = 0; c < 3; ++c) out.at(static_cast<int>(t), x, c) = clip.frames[t].at(row, x, c);
  return out;
}

namespace {
constexpr double kMotionExplained = 0.5;
}  // namespace

double flicker_metric(const VideoClip& clip, const std::vector<HoleMask>& regions, const AlignConfig& align) {
  clip.validate();
  if (regions.size() != clip.size()) throw InvalidArgument("flicker_metric: one region per frame required");
  const int h = clip.height();
  const int w = clip.width();
  HoleMask uni(h, w);
  for (const HoleMask& r : regions) {
    if (r.height() != h || r.width() != w) throw InvalidArgument("flicker_metric: region shape mismatch");
    for (std::size_t i = 0; i < r.data().size(); ++i) uni.data()[i] |= r.data()[i];
  }
  if (!uni.has_hole()) throw InvalidArgument("flicker_metric: empty region union");
  if (clip.size() == 1) return 0.0;

  const VisibilityMap full(h, w, 1.0, true);
  std::vector<WarpResult> aligned(clip.size());
  aligned[0] = {clip.frames[0], full};
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 1; k < clip.size(); ++k) {
    AffineParams params = AffineParams::identity();
    try {
      const AlignResult res = estimate_affine(clip.frames[0], full, clip.frames[k], full, align);
      // Keep the motion only when it explains most of the frame difference; on unstructured
      // content any sub-pixel shift lowers the objective by smoothing alone.
      if (res.objective <= kMotionExplained * res.initial_objective) params = res.params;
    } catch (const NumericError&) {
    }
    aligned[k] = warp_affine(clip.frames[k], full, params);
  }

  double total = 0.0;
  std::size_t pixels = 0;
  std::vector<double> values;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!uni.at(y, x)) continue;
      for (int c = 0; c < 3; ++c) {
        values.clear();
        for (const WarpResult& a : aligned)
          if (a.visibility.at(y, x) == 1.0) values.push_back(a.image.at(y, x, c));
        if (values.size() < 2) continue;
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        total += std::sqrt(ss / static_cast<double>(values.size() - 1));
        ++pixels;
      }
    }
  return pixels ? total / static_cast<double>(pixels) : 0.0;
}

std::vector<FrameMetrics> evaluate_clip(const VideoClip& pred, const VideoClip& truth,
                                        const std::vector<HoleMask>& holes) {
  if (pred.size() != truth.size() || pred.size() != holes.size()) {
    throw InvalidArgument("evaluate_clip: clip lengths differ");
  }
  std::vector<FrameMetrics> rows;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    FrameMetrics m;
    m.frame = static_cast<int>(t);
    m.psnr_full = psnr(pred.frames[t], truth.frames[t]);
    if (holes[t].has_hole()) m.psnr_hole = psnr(pred.frames[t], truth.frames[t], &holes[t]);
    m.ssim = ssim(pred.frames[t], truth.frames[t]);
    rows.push_back(m);
  }
  return rows;
}

std::string metrics_to_csv(const std::vector<FrameMetrics>& rows) {
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  std::ostringstream out;
  out << "frame,psnr_full,psnr_hole,ssim\n";
  double full = 0.0, hole = 0.0, s = 0.0;
  int holes = 0;
  for (const FrameMetrics& m : rows) {
    out << m.frame << "," << num(m.psnr_full) << "," << (m.psnr_hole ? num(*m.psnr_hole) : "nan") << ","
        << num(m.ssim) << "\n";
    full += m.psnr_full;
    s += m.ssim;
    if (m.psnr_hole) {
      hole += *m.psnr_hole;
      ++holes;
    }
  }
  const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
  out << "mean," << num(full / n) << "," << (holes ? num(hole / holes) : "nan") << "," << num(s / n) << "\n";
  return out.str();
}

}  // namespace cpi
