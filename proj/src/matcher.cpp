#include "cpi/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cpi/errors.hpp"

namespace cpi {

std::string to_string(SoftmaxMode mode) { return mode == SoftmaxMode::kMasked ? "masked" : "normal"; }

SoftmaxMode softmax_mode_from_string(const std::string& name) {
  if (name == "masked") return SoftmaxMode::kMasked;
  if (name == "normal") return SoftmaxMode::kNormal;
  throw InvalidArgument("unknown softmax mode '" + name + "' (expected masked or normal)");
}

namespace {

// Sums in ascending order so the result does not depend on reference order.
double ordered_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

// 1 - sum is an indicator; absorb the rounding of a partition of unity.
double indicator(double value) {
  if (std::abs(value) < 1e-9) return 0.0;
  if (std::abs(value - 1.0) < 1e-9) return 1.0;
  return value;
}

template <typename A, typename B>
void require_same_size(const A& a, const B& b, const char* what) {
  if (!a.same_size(b)) throw InvalidArgument(std::string("shape mismatch: ") + what);
}

}  // namespace

Similarity global_similarity(const FeatureMap& f_t, const FeatureMap& f_r, const VisibilityMap& v) {
  if (!f_t.same_shape(f_r)) throw InvalidArgument("global_similarity: feature maps differ in shape");
  require_same_size(f_t, v, "global_similarity visibility");
  double weighted = 0.0;
  double support = 0.0;
  for (int y = 0; y < f_t.height(); ++y) {
    for (int x = 0; x < f_t.width(); ++x) {
      const double vis = v.at(y, x);
      if (vis == 0.0) continue;
      const auto a = f_t.pixel(y, x);
      const auto b = f_r.pixel(y, x);
      double dot = 0.0;
      for (std::size_t c = 0; c < a.size(); ++c) dot += a[c] * b[c];
      weighted += vis * dot;
      support += vis;
    }
  }
  if (support == 0.0) return {0.0, false};
  return {weighted / support, true};
}

Plane saliency(double theta, const VisibilityMap& v_ref) {
  Plane s(v_ref.height(), v_ref.width());
  auto out = s.data();
  auto in = v_ref.data();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = theta * in[i];
  return s;
}

std::vector<Plane> masked_softmax(const std::vector<Plane>& s, const std::vector<VisibilityMap>& v_ref,
                                  SoftmaxMode mode) {
  if (s.size() != v_ref.size()) throw InvalidArgument("masked_softmax: saliency/visibility count mismatch");
  if (s.empty()) return {};
  const int h = s.front().height();
  const int w = s.front().width();
  for (std::size_t r = 0; r < s.size(); ++r) {
    require_same_size(s[r], s.front(), "masked_softmax saliency");
    require_same_size(v_ref[r], s.front(), "masked_softmax visibility");
  }
  const std::size_t refs = s.size();
  std::vector<Plane> weights(refs, Plane(h, w));
  std::vector<double> exps(refs);
  std::vector<double> terms;
  terms.reserve(refs);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < refs; ++r) {
        if (mode == SoftmaxMode::kMasked && v_ref[r].at(y, x) != 1.0) continue;
        peak = std::max(peak, s[r].at(y, x));
      }
      if (!std::isfinite(peak)) continue;  // no visible reference: all weights stay 0
      terms.clear();
      for (std::size_t r = 0; r < refs; ++r) {
        const bool included = mode == SoftmaxMode::kNormal || v_ref[r].at(y, x) == 1.0;
        exps[r] = included ? std::exp(s[r].at(y, x) - peak) : 0.0;
        if (included) terms.push_back(exps[r]);
      }
      const double denom = ordered_sum(terms);
      for (std::size_t r = 0; r < refs; ++r) weights[r].at(y, x) = exps[r] / denom;
    }
  }
  return weights;
}

Aggregation aggregate(const std::vector<FeatureMap>& f_refs, const std::vector<Plane>& c_match,
                      const std::vector<VisibilityMap>& v_ref) {
  if (f_refs.size() != c_match.size() || f_refs.size() != v_ref.size()) {
    throw InvalidArgument("aggregate: reference list lengths differ");
  }
  if (f_refs.empty()) throw InvalidArgument("aggregate: needs at least one reference to fix the output shape");
  const FeatureMap& first = f_refs.front();
  for (std::size_t r = 0; r < f_refs.size(); ++r) {
    if (!f_refs[r].same_shape(first)) throw InvalidArgument("aggregate: reference feature shapes differ");
    require_same_size(c_match[r], first, "aggregate weights");
    require_same_size(v_ref[r], first, "aggregate visibility");
  }
  const int h = first.height();
  const int w = first.width();
  const int channels = first.channels();
  Aggregation out{FeatureMap(h, w, channels, first.stride()), Plane(h, w)};
  std::vector<double> terms;
  terms.reserve(f_refs.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        terms.clear();
        for (std::size_t r = 0; r < f_refs.size(); ++r) terms.push_back(f_refs[r].at(y, x, c) * c_match[r].at(y, x));
        out.c_out.at(y, x, c) = ordered_sum(terms);
      }
      terms.clear();
      for (const auto& weight : c_match) terms.push_back(weight.at(y, x));
      out.c_mask.at(y, x) = indicator(1.0 - ordered_sum(terms));
    }
  }
  return out;
}

MatchResult match(const MatchInput& input, SoftmaxMode mode) {
  const std::size_t refs = input.refs.size();
  if (input.joint_visibility.size() != refs || input.ref_visibility.size() != refs) {
    throw InvalidArgument("match: reference list lengths differ");
  }
  const FeatureMap& target = input.target;
  MatchResult result;
  result.theta.assign(refs, 0.0);
  result.usable.assign(refs, false);
  for (std::size_t r = 0; r < refs; ++r) {
    if (!input.refs[r].same_shape(target)) throw InvalidArgument("match: reference features differ in shape");
    const Similarity sim = global_similarity(target, input.refs[r], input.joint_visibility[r]);
    result.theta[r] = sim.theta;
    result.usable[r] = sim.usable;
  }

  // Only usable references take part in the softmax.
  std::vector<std::size_t> kept;
  std::vector<Plane> s;
  std::vector<VisibilityMap> v;
  for (std::size_t r = 0; r < refs; ++r) {
    if (!result.usable[r]) continue;
    kept.push_back(r);
    s.push_back(saliency(result.theta[r], input.ref_visibility[r]));
    v.push_back(input.ref_visibility[r]);
  }
  const std::vector<Plane> weights = masked_softmax(s, v, mode);

  result.c_match.assign(refs, Plane(target.height(), target.width()));
  for (std::size_t k = 0; k < kept.size(); ++k) result.c_match[kept[k]] = weights[k];

  if (refs == 0) {
    result.c_out = FeatureMap(target.height(), target.width(), target.channels(), target.stride());
    result.c_mask = Plane(target.height(), target.width(), 1.0);
    return result;
  }
  Aggregation agg = aggregate(input.refs, result.c_match, input.ref_visibility);
  result.c_out = std::move(agg.c_out);
  result.c_mask = std::move(agg.c_mask);
  return result;
}

}  // namespace cpi
