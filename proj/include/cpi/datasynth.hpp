#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cpi/align.hpp"
#include "cpi/image.hpp"

namespace cpi {

struct SynthParams {
  int n_frames = 5;
  int out_size = 256;
  // Per-step background motion, uniform in [-x, x].
  double rotation_deg = 2.0;
  double shear_deg = 2.0;
  double scale = 0.02;
  double translation = 5.0;
  double mask_scale_max = 0.5;
  // Per-step object motion (random walk of position and angle).
  double mask_rotation_deg = 3.0;
  double mask_translation = 6.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Background {
  std::vector<Frame> frames;
  // frame_k(p) = source(viewports[k](p)) in pixel coordinates.
  std::vector<PixelAffine> viewports;
};

// Random crop followed by a random walk of composed per-step transforms about the crop centre.
Background synth_background(const Frame& source, const SynthParams& p, std::mt19937_64& rng);

std::vector<HoleMask> synth_mask_sequence(const HoleMask& object_mask, const SynthParams& p, std::mt19937_64& rng);

struct SynthClip {
  VideoClip input;  // hole pixels zeroed, masks attached
  VideoClip truth;  // masks all zero
};

SynthClip composite_holes(const std::vector<Frame>& bg, const std::vector<HoleMask>& masks);

// Still-image and object stand-ins when no user data is given.
Frame procedural_source(int height, int width, std::uint64_t seed);
HoleMask procedural_object_mask(int size, std::uint64_t seed);

// key=value lines.
std::string synth_manifest(const SynthParams& p);

}  // namespace cpi
