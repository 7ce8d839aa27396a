#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cpi/align.hpp"
#include "cpi/image.hpp"

namespace cpi {

constexpr double kPsnrCap = 99.0;

// Peak 1.0; MSE over region pixels and channels. Identical inputs give kPsnrCap.
double psnr(const Frame& a, const Frame& b, const HoleMask* region = nullptr);

// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 0.01, K2 0.03, range 1.0, valid
// window positions, averaged over channels.
double ssim(const Frame& a, const Frame& b);

// Row t holds frame t's pixel row `row`.
Image temporal_profile(const VideoClip& clip, int row);

// Mean over the union of the regions of the per-pixel temporal sample standard deviation
// after aligning every frame to the first one. An estimated motion is kept only if it at
// least halves the identity alignment objective.
double flicker_metric(const VideoClip& clip, const std::vector<HoleMask>& regions, const AlignConfig& align = {});

struct FrameMetrics {
  int frame = 0;
  double psnr_full = 0.0;
  std::optional<double> psnr_hole;  // empty when the frame has no hole
  double ssim = 0.0;
};

std::vector<FrameMetrics> evaluate_clip(const VideoClip& pred, const VideoClip& truth,
                                        const std::vector<HoleMask>& holes);

// frame,psnr_full,psnr_hole,ssim rows followed by a mean row.
std::string metrics_to_csv(const std::vector<FrameMetrics>& rows);

}  // namespace cpi
