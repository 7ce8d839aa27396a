#include "cpi/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cpi/errors.hpp"
#include "cpi/media.hpp"
#include "cpi/paste.hpp"

namespace cpi {

void InpaintConfig::validate() const {
  if (max_refs < 1) throw InvalidArgument("max_refs must be >= 1");
  if (ref_stride && *ref_stride < 1) throw InvalidArgument("ref_stride must be >= 1 or auto");
  encoder.validate();
  align.validate();
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

VisibilityMap product(const VisibilityMap& a, const VisibilityMap& b) {
  VisibilityMap out(a.height(), a.width(), 0.0, true);
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) out.at(y, x) = a.at(y, x) * b.at(y, x);
  return out;
}

}  // namespace

std::string report_to_csv(const PipelineReport& report) {
  std::ostringstream out;
  out << "frame,ref_index,theta,align_objective,invisible_fraction,ms_align,ms_match,ms_paste\n";
  for (const FrameReport& f : report.frames) {
    const std::string tail = number(f.invisible_fraction) + "," + number(f.ms_align) + "," + number(f.ms_match) +
                             "," + number(f.ms_paste) + "\n";
    if (f.refs.empty()) {
      out << f.frame << ",-1,nan,nan," << tail;
      continue;
    }
    for (const ReferenceEntry& r : f.refs) {
      out << f.frame << "," << r.index << "," << (r.usable ? number(r.theta) : "nan") << ","
          << (r.aligned ? number(r.align_objective) : "nan") << "," << tail;
    }
  }
  return out.str();
}

std::vector<int> select_references(int n, int t, const InpaintConfig& cfg) {
  if (n < 1 || t < 0 || t >= n) throw InvalidArgument("select_references: frame index out of range");
  const int stride = cfg.ref_stride.value_or(1);
  std::vector<int> candidates;
  for (int i = 0; i < n; ++i) {
    if (i != t && std::abs(i - t) % stride == 0) candidates.push_back(i);
  }
  const std::size_t k = static_cast<std::size_t>(cfg.max_refs);
  if (candidates.size() <= k) return candidates;
  std::vector<int> picked;
  for (std::size_t j = 0; j < k; ++j) picked.push_back(candidates[j * candidates.size() / k]);
  return picked;
}

FrameResult complete_frame(const VideoClip& clip, int t, const std::vector<AlignedReference>& refs,
                           const InpaintConfig& cfg) {
  const Frame& target = clip.frames[t];
  const HoleMask& hole = clip.masks[t];
  const int h = target.height();
  const int w = target.width();
  const int stride = cfg.encoder.stride;
  FrameResult result;
  result.report.frame = t;
  const std::size_t holes = hole.hole_count();
  if (holes == 0) {
    result.frame = target;
    result.c_mask = Plane(h, w);
    return result;
  }

  auto start = Clock::now();
  const Encoder encoder(cfg.encoder);
  const VisibilityMap v_t = mask_to_visibility(hole);
  const VisibilityMap v_t_low = downsample_visibility(v_t, stride);

  std::vector<Frame> warped;
  std::vector<VisibilityMap> warped_vis;
  MatchInput match_in;
  match_in.target = normalize_features(encoder.encode(target, hole));
  for (const AlignedReference& ref : refs) {
    WarpResult wr = warp_affine(clip.frames[ref.index], mask_to_visibility(clip.masks[ref.index]), ref.params);
    HoleMask ref_hole(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) ref_hole.at(y, x) = wr.visibility.at(y, x) == 1.0 ? 0 : 1;
    match_in.refs.push_back(normalize_features(encoder.encode(wr.image, ref_hole)));
    const VisibilityMap v_r_low = downsample_visibility(wr.visibility, stride);
    match_in.joint_visibility.push_back(product(v_t_low, v_r_low));
    match_in.ref_visibility.push_back(v_r_low);
    warped.push_back(std::move(wr.image));
    warped_vis.push_back(std::move(wr.visibility));
  }
  const MatchResult matched = match(match_in, cfg.softmax_mode);
  result.report.ms_match = elapsed_ms(start);

  start = Clock::now();
  PasteInput paste_in;
  paste_in.target = target;
  paste_in.hole = hole;
  paste_in.stride = stride;
  std::vector<double> theta;
  for (std::size_t r = 0; r < refs.size(); ++r) {
    ReferenceEntry entry;
    entry.index = refs[r].index;
    entry.aligned = true;
    entry.usable = matched.usable[r];
    entry.theta = matched.theta[r];
    entry.align_objective = refs[r].objective;
    entry.params = refs[r].params;
    result.report.refs.push_back(entry);
    if (!matched.usable[r]) continue;
    paste_in.warped_refs.push_back(warped[r]);
    paste_in.warped_vis.push_back(warped_vis[r]);
    paste_in.c_match_lowres.push_back(matched.c_match[r]);
    theta.push_back(matched.theta[r]);
  }
  const FullResWeights weights =
      upsample_weights(paste_in.c_match_lowres, paste_in.warped_vis, stride, theta, cfg.softmax_mode);
  PasteResult pasted = composite_paste(paste_in, weights);
  result.report.invisible_fraction =
      static_cast<double>(pasted.fill_region.hole_count()) / static_cast<double>(holes);
  result.frame = diffusion_fill(std::move(pasted.frame), pasted.fill_region);
  result.c_mask = std::move(pasted.c_mask);
  result.report.ms_paste = elapsed_ms(start);
  return result;
}

FrameResult inpaint_frame(const VideoClip& clip, int t, const InpaintConfig& cfg,
                          std::vector<std::optional<AffineParams>>* previous) {
  clip.validate();
  if (t < 0 || t >= static_cast<int>(clip.size())) throw InvalidArgument("inpaint_frame: frame index out of range");
  if (!clip.masks[t].has_hole()) return complete_frame(clip, t, {}, cfg);

  const auto start = Clock::now();
  const std::vector<int> selected = select_references(static_cast<int>(clip.size()), t, cfg);
  const VisibilityMap v_t = mask_to_visibility(clip.masks[t]);
  std::vector<std::optional<AlignedReference>> aligned(selected.size());

#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const int r = selected[i];
    const VisibilityMap v_r = mask_to_visibility(clip.masks[r]);
    AffineParams init = AffineParams::identity();
    if (cfg.align.init == AlignInit::kPrevious && previous && (*previous)[r]) {
      const double eps = cfg.align.charbonnier_eps;
      const AlignObjective at_prev = alignment_objective(clip.frames[t], v_t, clip.frames[r], v_r, *(*previous)[r], eps);
      const AlignObjective at_id = alignment_objective(clip.frames[t], v_t, clip.frames[r], v_r, init, eps);
      if (at_prev.support > 0.0 && at_prev.value < at_id.value) init = *(*previous)[r];
    }
    try {
      const AlignResult res = estimate_affine(clip.frames[t], v_t, clip.frames[r], v_r, cfg.align, init);
      aligned[i] = AlignedReference{r, res.params, res.objective};
    } catch (const NumericError&) {
      // Not enough shared content: the reference is dropped.
    }
  }
  const double ms_align = elapsed_ms(start);

  std::vector<AlignedReference> refs;
  for (const auto& a : aligned)
    if (a) refs.push_back(*a);
  if (previous) {
    for (const AlignedReference& a : refs) (*previous)[a.index] = a.params;
  }
  FrameResult result = complete_frame(clip, t, refs, cfg);
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (aligned[i]) continue;
    ReferenceEntry dropped;
    dropped.index = selected[i];
    result.report.refs.push_back(dropped);
  }
  result.report.ms_align = ms_align;
  return result;
}

Frame blend_passes(const Frame& forward, const Frame& reverse, int t, int n) {
  if (n < 1 || t < 1 || t > n) throw InvalidArgument("blend_passes: t must satisfy 1 <= t <= N");
  if (!forward.same_shape(reverse)) throw InvalidArgument("blend_passes: frames differ in shape");
  if (t == n) return forward;
  const double wf = static_cast<double>(t) / n;
  const double wr = static_cast<double>(n - t) / n;
  Frame out(forward.height(), forward.width());
  auto o = out.data();
  auto f = forward.data();
  auto r = reverse.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = f[i] * wf + r[i] * wr;
  return out;
}

namespace {

std::vector<Frame> run_pass(const VideoClip& input, const InpaintConfig& cfg, bool reverse, PipelineReport* report) {
  VideoClip state = input;
  const int n = static_cast<int>(input.size());
  std::vector<Frame> out(input.size());
  std::vector<std::optional<AffineParams>> previous(input.size());
  for (int k = 0; k < n; ++k) {
    const int t = reverse ? n - 1 - k : k;
    FrameResult res = inpaint_frame(state, t, cfg, &previous);
    if (report) report->frames.push_back(std::move(res.report));
    out[t] = res.frame;
    if (cfg.reference_update) {
      state.frames[t] = std::move(res.frame);
      state.masks[t] = HoleMask(input.height(), input.width());
    }
  }
  return out;
}

}  // namespace

InpaintOutput inpaint_video(const VideoClip& clip, const InpaintConfig& cfg) {
  clip.validate();
  cfg.validate();
  InpaintOutput result;
  std::vector<Frame> forward = run_pass(clip, cfg, false, &result.report);
  const int n = static_cast<int>(clip.size());
  if (cfg.bidirectional) {
    const std::vector<Frame> reverse = run_pass(clip, cfg, true, nullptr);
    for (int t = 0; t < n; ++t) {
      if (!clip.masks[t].has_hole()) continue;
      Frame blended = blend_passes(forward[t], reverse[t], t + 1, n);
      // Both passes keep known pixels; restore them bit-exactly after the blend.
      for (int y = 0; y < clip.height(); ++y)
        for (int x = 0; x < clip.width(); ++x)
          if (!clip.masks[t].at(y, x))
            for (int c = 0; c < 3; ++c) blended.at(y, x, c) = clip.frames[t].at(y, x, c);
      forward[t] = std::move(blended);
    }
  }
  result.clip.frames = std::move(forward);
  result.clip.masks.assign(clip.size(), HoleMask(clip.height(), clip.width()));
  return result;
}

}  // namespace cpi
