#pragma once

#include <string>
#include <vector>

#include "cpi/features.hpp"
#include "cpi/image.hpp"

namespace cpi {

// kMasked normalizes only over references visible at a cell. kNormal is the plain
// softmax over every reference (invisible ones enter with S = 0) and exists for ablation.
enum class SoftmaxMode { kMasked, kNormal };

std::string to_string(SoftmaxMode mode);
SoftmaxMode softmax_mode_from_string(const std::string& name);

struct MatchInput {
  FeatureMap target;                              // normalized
  std::vector<FeatureMap> refs;                   // normalized, aligned to the target
  std::vector<VisibilityMap> joint_visibility;    // V^t * V^{r->t}, feature resolution
  std::vector<VisibilityMap> ref_visibility;      // V^{r->t}, feature resolution
};

struct MatchResult {
  std::vector<double> theta;
  std::vector<bool> usable;  // false when the reference shares no visible cell with the target
  std::vector<Plane> c_match;
  FeatureMap c_out;
  Plane c_mask;
};

struct Similarity {
  double theta = 0.0;
  bool usable = false;
};

// Visibility-weighted mean of per-cell inner products.
Similarity global_similarity(const FeatureMap& f_t, const FeatureMap& f_r, const VisibilityMap& v);

Plane saliency(double theta, const VisibilityMap& v_ref);

// Per-cell softmax of the saliency maps across references.
std::vector<Plane> masked_softmax(const std::vector<Plane>& s, const std::vector<VisibilityMap>& v_ref,
                                  SoftmaxMode mode = SoftmaxMode::kMasked);

struct Aggregation {
  FeatureMap c_out;
  Plane c_mask;
};

// c_out = sum_r f_r * c_match_r, c_mask = 1 - sum_r c_match_r.
Aggregation aggregate(const std::vector<FeatureMap>& f_refs, const std::vector<Plane>& c_match,
                      const std::vector<VisibilityMap>& v_ref);

// Full context matching. Unusable references get theta = 0 and are excluded from the
// softmax entirely (all-zero weights).
MatchResult match(const MatchInput& input, SoftmaxMode mode = SoftmaxMode::kMasked);

}  // namespace cpi
