#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cpi/features.hpp"
#include "cpi/image.hpp"

namespace cpi {

struct LossWeights {
  double align = 2.0;
  double hole_visible = 10.0;
  double hole_invisible = 20.0;
  double non_hole = 6.0;
  double perceptual = 0.01;
  double style = 24.0;
  double tv = 0.1;

  void validate() const;
};

struct LossComponents {
  double align = 0.0;
  double hole_visible = 0.0;
  double hole_invisible = 0.0;
  double non_hole = 0.0;
  double perceptual = 0.0;
  double style = 0.0;
  double tv = 0.0;
};

struct RegionLosses {
  double hole_visible = 0.0;
  double hole_invisible = 0.0;
  double non_hole = 0.0;
};

// Per-pixel means of the channel-summed L1 residual, split by hole and by c_mask.
// `swap_visibility_terms` swaps the c_mask / (1 - c_mask) factors of the two hole terms.
RegionLosses region_losses(const Frame& pred, const Frame& truth, const HoleMask& hole, const Plane& c_mask,
                           bool swap_visibility_terms = false);

using Matrix = std::vector<std::vector<double>>;

// G = F^T F / (C h w) with F the (h w) x C unrolling.
Matrix gram_matrix(const Image& f);

struct FeatureBackbone {
  std::vector<std::function<FeatureMap(const Frame&)>> stages;
};

// One stage returning the frame itself.
FeatureBackbone identity_backbone();
// Seeded-conv encoder at strides 2, 4 and 8.
FeatureBackbone default_backbone(std::uint64_t seed = 0, int channels = 16);

struct PerceptualStyle {
  double perceptual = 0.0;
  double style = 0.0;
};

PerceptualStyle perceptual_style_loss(const Frame& pred_comp, const Frame& truth, const FeatureBackbone& backbone);

// Channel-summed anisotropic L1 of forward differences over the number of difference positions.
double tv_loss(const Image& frame);

double total_loss(const LossComponents& components, const LossWeights& weights = {});

}  // namespace cpi
