#include "cpi/paste.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cpi/align.hpp"
#include "cpi/errors.hpp"

namespace cpi {

FullResWeights upsample_weights(const std::vector<Plane>& c_match, const std::vector<VisibilityMap>& warped_vis,
                                int stride, std::span<const double> theta, SoftmaxMode mode) {
  if (c_match.size() != warped_vis.size()) throw InvalidArgument("upsample_weights: list lengths differ");
  if (!theta.empty() && theta.size() != c_match.size()) throw InvalidArgument("upsample_weights: theta length");
  if (stride < 1) throw InvalidArgument("upsample_weights: stride must be positive");
  if (c_match.empty()) return {};
  const int h = warped_vis.front().height();
  const int w = warped_vis.front().width();
  const int lh = (h + stride - 1) / stride;
  const int lw = (w + stride - 1) / stride;
  for (std::size_t r = 0; r < c_match.size(); ++r) {
    if (c_match[r].height() != lh || c_match[r].width() != lw || warped_vis[r].height() != h ||
        warped_vis[r].width() != w) {
      throw InvalidArgument("upsample_weights: inconsistent stride or shapes");
    }
  }
  const std::size_t refs = c_match.size();
  FullResWeights out;
  out.weights.assign(refs, Plane(h, w));
  out.c_mask = Plane(h, w);
  std::vector<double> wt(refs);
  for (int y = 0; y < h; ++y) {
    const double ly = (y + 0.5) / stride - 0.5;
    for (int x = 0; x < w; ++x) {
      const double lx = (x + 0.5) / stride - 0.5;
      double total = 0.0;
      bool any_visible = false;
      for (std::size_t r = 0; r < refs; ++r) {
        wt[r] = sample_bilinear(c_match[r], lx, ly, 0);
        if (mode == SoftmaxMode::kMasked) {
          const bool visible = warped_vis[r].at(y, x) == 1.0;
          any_visible = any_visible || visible;
          if (!visible) wt[r] = 0.0;
        }
        total += wt[r];
      }
      if (total <= 0.0 && any_visible) {
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < refs; ++r)
          if (warped_vis[r].at(y, x) == 1.0) peak = std::max(peak, theta.empty() ? 0.0 : theta[r]);
        for (std::size_t r = 0; r < refs; ++r) {
          wt[r] = warped_vis[r].at(y, x) == 1.0 ? std::exp((theta.empty() ? 0.0 : theta[r]) - peak) : 0.0;
          total += wt[r];
        }
      }
      double mass = 0.0;
      if (total > 0.0) {
        for (std::size_t r = 0; r < refs; ++r) {
          out.weights[r].at(y, x) = wt[r] / total;
          mass += out.weights[r].at(y, x);
        }
      }
      out.c_mask.at(y, x) = mass > 0.0 ? std::max(0.0, 1.0 - mass) : 1.0;
      if (out.c_mask.at(y, x) < 1e-9) out.c_mask.at(y, x) = 0.0;
    }
  }
  return out;
}

PasteResult composite_paste(const PasteInput& input, const FullResWeights& weights) {
  const Frame& target = input.target;
  const int h = target.height();
  const int w = target.width();
  if (input.hole.height() != h || input.hole.width() != w) throw InvalidArgument("composite_paste: hole shape");
  if (input.warped_refs.size() != weights.weights.size()) throw InvalidArgument("composite_paste: ref count");
  for (std::size_t r = 0; r < input.warped_refs.size(); ++r) {
    if (!input.warped_refs[r].same_shape(target) || !weights.weights[r].same_size(target)) {
      throw InvalidArgument("composite_paste: reference shape mismatch");
    }
  }
  PasteResult out{target, Plane(h, w, 1.0), HoleMask(h, w)};
  if (!weights.weights.empty()) {
    if (!weights.c_mask.same_size(target)) throw InvalidArgument("composite_paste: c_mask shape");
    out.c_mask = weights.c_mask;
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!input.hole.at(y, x)) continue;
      double mass = 0.0;
      double acc[3] = {0.0, 0.0, 0.0};
      for (std::size_t r = 0; r < input.warped_refs.size(); ++r) {
        const double wr = weights.weights[r].at(y, x);
        if (wr == 0.0) continue;
        mass += wr;
        for (int c = 0; c < 3; ++c) acc[c] += wr * input.warped_refs[r].at(y, x, c);
      }
      for (int c = 0; c < 3; ++c) out.frame.at(y, x, c) = mass > 0.0 ? acc[c] : 0.0;
      if (mass <= 0.0) out.fill_region.at(y, x) = 1;
    }
  }
  return out;
}

Frame diffusion_fill(Frame frame, const HoleMask& region, const DiffusionOptions& options, DiffusionStats* stats) {
  const int h = frame.height();
  const int w = frame.width();
  if (region.height() != h || region.width() != w) throw InvalidArgument("diffusion_fill: region shape");
  DiffusionStats local;
  DiffusionStats& st = stats ? *stats : local;
  st = {};

  std::vector<int> unknown[2];  // red / black by (x + y) parity
  int y_min = h, y_max = -1, x_min = w, x_max = -1;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!region.at(y, x)) continue;
      unknown[(x + y) & 1].push_back(y * w + x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
    }
  }
  const std::size_t count = unknown[0].size() + unknown[1].size();
  if (count == 0) return frame;
  if (count == static_cast<std::size_t>(h) * w) {
    for (double& v : frame.data()) v = 0.5;
    return frame;
  }

  // Start from the mean of the known pixels bordering the region.
  double seed[3] = {0.0, 0.0, 0.0};
  int seeds = 0;
  const int dx[4] = {1, -1, 0, 0};
  const int dy[4] = {0, 0, 1, -1};
  for (const auto& list : unknown) {
    for (int idx : list) {
      const int y = idx / w;
      const int x = idx % w;
      for (int k = 0; k < 4; ++k) {
        const int ny = y + dy[k];
        const int nx = x + dx[k];
        if (ny < 0 || ny >= h || nx < 0 || nx >= w || region.at(ny, nx)) continue;
        for (int c = 0; c < 3; ++c) seed[c] += frame.at(ny, nx, c);
        ++seeds;
      }
    }
  }
  for (const auto& list : unknown)
    for (int idx : list)
      for (int c = 0; c < 3; ++c) frame.at(idx / w, idx % w, c) = seed[c] / seeds;

  const int extent = std::max(y_max - y_min + 1, x_max - x_min + 1);
  const double omega = 2.0 / (1.0 + std::sin(std::numbers::pi / (extent + 1)));

  auto neighbour_mean = [&](int y, int x, double* mean) {
    double acc[3] = {0.0, 0.0, 0.0};
    int n = 0;
    for (int k = 0; k < 4; ++k) {
      const int ny = y + dy[k];
      const int nx = x + dx[k];
      if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
      for (int c = 0; c < 3; ++c) acc[c] += frame.at(ny, nx, c);
      ++n;
    }
    for (int c = 0; c < 3; ++c) mean[c] = acc[c] / n;
  };
  auto max_residual = [&] {
    double worst = 0.0;
    double mean[3];
    for (const auto& list : unknown)
      for (int idx : list) {
        neighbour_mean(idx / w, idx % w, mean);
        for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(mean[c] - frame.at(idx / w, idx % w, c)));
      }
    return worst;
  };

  double mean[3];
  while (st.sweeps < options.max_sweeps) {
    double change = 0.0;
    for (const auto& list : unknown) {
      for (int idx : list) {
        const int y = idx / w;
        const int x = idx % w;
        neighbour_mean(y, x, mean);
        for (int c = 0; c < 3; ++c) {
          double& u = frame.at(y, x, c);
          const double delta = mean[c] - u;
          change = std::max(change, std::abs(delta));
          u += omega * delta;
        }
      }
    }
    ++st.sweeps;
    if (change < options.tolerance) {
      st.residual = max_residual();
      if (st.residual < options.tolerance) return frame;
    }
  }
  st.residual = max_residual();
  return frame;
}

}  // namespace cpi
