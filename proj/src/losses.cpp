#include "cpi/losses.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "cpi/errors.hpp"

namespace cpi {

void LossWeights::validate() const {
  for (double w : {align, hole_visible, hole_invisible, non_hole, perceptual, style, tv}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("loss weights must be finite and >= 0");
  }
}

RegionLosses region_losses(const Frame& pred, const Frame& truth, const HoleMask& hole, const Plane& c_mask,
                           bool swap_visibility_terms) {
  if (!pred.same_shape(truth)) throw InvalidArgument("region_losses: pred and truth differ in shape");
  if (hole.height() != pred.height() || hole.width() != pred.width() || !c_mask.same_size(pred)) {
    throw InvalidArgument("region_losses: mask shape mismatch");
  }
  RegionLosses out;
  for (int y = 0; y < pred.height(); ++y) {
    for (int x = 0; x < pred.width(); ++x) {
      double l1 = 0.0;
      for (int c = 0; c < 3; ++c) l1 += std::abs(pred.at(y, x, c) - truth.at(y, x, c));
      if (!hole.at(y, x)) {
        out.non_hole += l1;
        continue;
      }
      const double never = c_mask.at(y, x);
      const double seen = 1.0 - never;
      out.hole_visible += (swap_visibility_terms ? never : seen) * l1;
      out.hole_invisible += (swap_visibility_terms ? seen : never) * l1;
    }
  }
  const double n = static_cast<double>(pred.height()) * pred.width();
  out.hole_visible /= n;
  out.hole_invisible /= n;
  out.non_hole /= n;
  return out;
}

Matrix gram_matrix(const Image& f) {
  const int ch = f.channels();
  Matrix g(ch, std::vector<double>(ch, 0.0));
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      const auto v = f.pixel(y, x);
      for (int i = 0; i < ch; ++i)
        for (int j = i; j < ch; ++j) g[i][j] += v[i] * v[j];
    }
  }
  const double norm = static_cast<double>(ch) * f.height() * f.width();
  for (int i = 0; i < ch; ++i) {
    for (int j = i; j < ch; ++j) {
      g[i][j] = norm > 0.0 ? g[i][j] / norm : 0.0;
      g[j][i] = g[i][j];
    }
  }
  return g;
}

FeatureBackbone identity_backbone() {
  FeatureBackbone b;
  b.stages.push_back([](const Frame& f) {
    FeatureMap out(f.height(), f.width(), 3, 1);
    std::copy(f.data().begin(), f.data().end(), out.data().begin());
    return out;
  });
  return b;
}

FeatureBackbone default_backbone(std::uint64_t seed, int channels) {
  FeatureBackbone b;
  for (int stride : {2, 4, 8}) {
    EncoderSpec spec;
    spec.kind = EncoderKind::kSeededConv;
    spec.stride = stride;
    spec.channels = channels;
    spec.seed = seed;
    spec.layers = 3;
    auto encoder = std::make_shared<const Encoder>(spec);
    b.stages.push_back([encoder](const Frame& f) { return encoder->encode(f, HoleMask(f.height(), f.width())); });
  }
  return b;
}

PerceptualStyle perceptual_style_loss(const Frame& pred_comp, const Frame& truth, const FeatureBackbone& backbone) {
  if (!pred_comp.same_shape(truth)) throw InvalidArgument("perceptual_style_loss: shape mismatch");
  if (backbone.stages.empty()) throw InvalidArgument("perceptual_style_loss: backbone has no stages");
  PerceptualStyle out;
  for (const auto& stage : backbone.stages) {
    const FeatureMap a = stage(pred_comp);
    const FeatureMap b = stage(truth);
    double l1 = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) l1 += std::abs(a.data()[i] - b.data()[i]);
    out.perceptual += l1 / (static_cast<double>(a.height()) * a.width());
    const Matrix ga = gram_matrix(a);
    const Matrix gb = gram_matrix(b);
    double gl1 = 0.0;
    for (std::size_t i = 0; i < ga.size(); ++i)
      for (std::size_t j = 0; j < ga.size(); ++j) gl1 += std::abs(ga[i][j] - gb[i][j]);
    out.style += gl1 / static_cast<double>(ga.size() * ga.size());
  }
  const double p = static_cast<double>(backbone.stages.size());
  out.perceptual /= p;
  out.style /= p;
  return out;
}

double tv_loss(const Image& f) {
  const int h = f.height();
  const int w = f.width();
  const double count = static_cast<double>(h) * (w - 1) + static_cast<double>(h - 1) * w;
  if (count <= 0.0) return 0.0;
  double acc = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < f.channels(); ++c) {
        if (x + 1 < w) acc += std::abs(f.at(y, x + 1, c) - f.at(y, x, c));
        if (y + 1 < h) acc += std::abs(f.at(y + 1, x, c) - f.at(y, x, c));
      }
    }
  }
  return acc / count;
}

double total_loss(const LossComponents& l, const LossWeights& w) {
  for (double v : {l.align, l.hole_visible, l.hole_invisible, l.non_hole, l.perceptual, l.style, l.tv}) {
    if (!std::isfinite(v)) throw NumericError("total_loss: non-finite component");
  }
  return w.align * l.align + w.hole_visible * l.hole_visible + w.hole_invisible * l.hole_invisible +
         w.non_hole * l.non_hole + w.perceptual * l.perceptual + w.style * l.style + w.tv * l.tv;
}

}  // namespace cpi
