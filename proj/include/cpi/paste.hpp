#pragma once

#include <span>
#include <vector>

#include "cpi/image.hpp"
#include "cpi/matcher.hpp"

namespace cpi {

struct PasteInput {
  Frame target;
  HoleMask hole;
  std::vector<Frame> warped_refs;           // aligned to the target, image resolution
  std::vector<VisibilityMap> warped_vis;    // binary, image resolution
  std::vector<Plane> c_match_lowres;        // from the matcher
  int stride = 4;
};

struct FullResWeights {
  std::vector<Plane> weights;
  Plane c_mask;  // 1 - sum of weights
};

// Bilinear upsampling of low-resolution copy weights.
//
// Masked mode zeroes each weight where that reference is invisible at full resolution and
// renormalizes per pixel. A pixel that is visible in some reference but received no weight
// mass (a cell touching a hole upstream) falls back to softmax(theta) over its visible
// references, or to uniform weights when `theta` is empty. Normal mode only upsamples.
FullResWeights upsample_weights(const std::vector<Plane>& c_match, const std::vector<VisibilityMap>& warped_vis,
                                int stride, std::span<const double> theta = {},
                                SoftmaxMode mode = SoftmaxMode::kMasked);

struct PasteResult {
  Frame frame;
  Plane c_mask;          // full resolution
  HoleMask fill_region;  // hole pixels no reference could supply
};

// Outside the hole: exact copy of the target. Inside: convex combination of the warped
// references; pixels without weight mass are left at 0 and listed in fill_region.
PasteResult composite_paste(const PasteInput& input, const FullResWeights& weights);

struct DiffusionOptions {
  double tolerance = 1e-5;  // max |u - mean of neighbours| over the region
  int max_sweeps = 10000;
};

struct DiffusionStats {
  int sweeps = 0;
  double residual = 0.0;
};

// Harmonic fill of `region` (1 = unknown) with Dirichlet data from the surrounding pixels,
// using red-black SOR. Neighbours outside the raster are ignored. A region covering the
// whole frame is filled with 0.5.
Frame diffusion_fill(Frame frame, const HoleMask& region, const DiffusionOptions& options = {},
                     DiffusionStats* stats = nullptr);

}  // namespace cpi
