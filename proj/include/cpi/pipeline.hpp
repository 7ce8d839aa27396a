#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cpi/align.hpp"
#include "cpi/features.hpp"
#include "cpi/image.hpp"
#include "cpi/matcher.hpp"

namespace cpi {

struct InpaintConfig {
  int max_refs = 10;
  std::optional<int> ref_stride;  // empty = auto
  EncoderSpec encoder;
  AlignConfig align;
  bool bidirectional = true;
  bool reference_update = true;
  SoftmaxMode softmax_mode = SoftmaxMode::kMasked;

  void validate() const;
};

struct ReferenceEntry {
  int index = -1;
  bool aligned = false;  // false when alignment failed and the reference was dropped
  bool usable = false;   // shares visible features with the target
  double theta = 0.0;
  double align_objective = 0.0;
  AffineParams params;
};

struct FrameReport {
  int frame = 0;
  std::vector<ReferenceEntry> refs;
  double invisible_fraction = 0.0;  // share of hole pixels no reference could supply
  double ms_align = 0.0;
  double ms_match = 0.0;
  double ms_paste = 0.0;
};

struct PipelineReport {
  std::vector<FrameReport> frames;  // forward pass, one entry per frame
};

std::string report_to_csv(const PipelineReport& report);

// Candidates are all other frames (every `ref_stride`-th when set), thinned evenly to max_refs.
std::vector<int> select_references(int n, int t, const InpaintConfig& cfg);

struct AlignedReference {
  int index = -1;
  AffineParams params;  // maps target coordinates into the reference
  double objective = 0.0;
};

struct FrameResult {
  Frame frame;
  FrameReport report;
  Plane c_mask;  // full resolution, 1 where no reference supplied content
};

// Copy-and-paste completion of frame t given already aligned references.
FrameResult complete_frame(const VideoClip& clip, int t, const std::vector<AlignedReference>& refs,
                           const InpaintConfig& cfg);

// Align selected references, then complete_frame. `previous` holds the estimates of the
// previously processed target (per reference index) and is updated in place.
FrameResult inpaint_frame(const VideoClip& clip, int t, const InpaintConfig& cfg,
                          std::vector<std::optional<AffineParams>>* previous = nullptr);

// Eq. 7 blend with 1-based t: forward * t/N + reverse * (N-t)/N.
Frame blend_passes(const Frame& forward, const Frame& reverse, int t, int n);

struct InpaintOutput {
  VideoClip clip;  // masks all zero
  PipelineReport report;
};

InpaintOutput inpaint_video(const VideoClip& clip, const InpaintConfig& cfg);

}  // namespace cpi
