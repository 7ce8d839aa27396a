#include "cpi/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "cpi/errors.hpp"

namespace cpi {

std::string to_string(EncoderKind kind) { return kind == EncoderKind::kRawPool ? "raw-pool" : "seeded-conv"; }

EncoderKind encoder_kind_from_string(const std::string& name) {
  if (name == "raw-pool") return EncoderKind::kRawPool;
  if (name == "seeded-conv") return EncoderKind::kSeededConv;
  throw InvalidArgument("unknown encoder kind '" + name + "' (expected raw-pool or seeded-conv)");
}

void EncoderSpec::validate() const {
  if (stride != 1 && stride != 2 && stride != 4 && stride != 8) {
    throw InvalidArgument("encoder.stride must be one of 1, 2, 4, 8");
  }
  if (kind == EncoderKind::kSeededConv) {
    if (channels < 1) throw InvalidArgument("encoder.channels must be >= 1");
    const int downsampling = std::countr_zero(static_cast<unsigned>(stride));
    if (layers < std::max(1, downsampling)) {
      throw InvalidArgument("encoder.layers must cover log2(stride) downsampling blocks");
    }
  }
}

Encoder::Encoder(EncoderSpec spec) : spec_(spec) {
  spec_.validate();
  if (spec_.kind != EncoderKind::kSeededConv) return;
  std::mt19937_64 rng(spec_.seed);
  const int downsampling = std::countr_zero(static_cast<unsigned>(spec_.stride));
  int in_channels = 4;
  for (int l = 0; l < spec_.layers; ++l) {
    ConvLayer layer;
    layer.in_channels = in_channels;
    layer.out_channels = spec_.channels;
    layer.stride = l < downsampling ? 2 : 1;
    const double fan_in = 9.0 * in_channels;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    layer.weights.resize(static_cast<std::size_t>(layer.out_channels) * in_channels * 9);
    for (double& w : layer.weights) w = dist(rng);
    layers_.push_back(std::move(layer));
    in_channels = spec_.channels;
  }
}

namespace {

FeatureMap raw_pool(const Frame& frame, int stride) {
  const int h = (frame.height() + stride - 1) / stride;
  const int w = (frame.width() + stride - 1) / stride;
  FeatureMap out(h, w, 3, stride);
  const double inv = 1.0 / (stride * stride);
  for (int cy = 0; cy < h; ++cy) {
    for (int cx = 0; cx < w; ++cx) {
      double acc[3] = {0.0, 0.0, 0.0};
      for (int dy = 0; dy < stride; ++dy) {
        const int y = std::min(cy * stride + dy, frame.height() - 1);
        for (int dx = 0; dx < stride; ++dx) {
          const int x = std::min(cx * stride + dx, frame.width() - 1);
          for (int c = 0; c < 3; ++c) acc[c] += frame.at(y, x, c);
        }
      }
      for (int c = 0; c < 3; ++c) out.at(cy, cx, c) = acc[c] * inv;
    }
  }
  return out;
}

// 3x3 convolution, zero padding 1, followed by ReLU.
Image conv_relu(const Image& in, int out_channels, int stride, const std::vector<double>& weights) {
  const int h = (in.height() + stride - 1) / stride;
  const int w = (in.width() + stride - 1) / stride;
  const int cin = in.channels();
  Image out(h, w, out_channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto dst = out.pixel(y, x);
      for (int ky = 0; ky < 3; ++ky) {
        const int sy = y * stride + ky - 1;
        if (sy < 0 || sy >= in.height()) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int sx = x * stride + kx - 1;
          if (sx < 0 || sx >= in.width()) continue;
          const auto src = in.pixel(sy, sx);
          for (int o = 0; o < out_channels; ++o) {
            const double* wk = weights.data() + (static_cast<std::size_t>(o) * cin * 9) + ky * 3 + kx;
            double acc = 0.0;
            for (int i = 0; i < cin; ++i) acc += wk[i * 9] * src[static_cast<std::size_t>(i)];
            dst[static_cast<std::size_t>(o)] += acc;
          }
        }
      }
      for (double& v : dst) v = std::max(v, 0.0);
    }
  }
  return out;
}

}  // namespace

FeatureMap Encoder::encode(const Frame& frame, const HoleMask& mask) const {
  if (frame.height() != mask.height() || frame.width() != mask.width()) {
    throw InvalidArgument("encode: frame and mask dimensions differ");
  }
  if (spec_.kind == EncoderKind::kRawPool) return raw_pool(frame, spec_.stride);

  Image x(frame.height(), frame.width(), 4);
  for (int y = 0; y < frame.height(); ++y) {
    for (int xx = 0; xx < frame.width(); ++xx) {
      for (int c = 0; c < 3; ++c) x.at(y, xx, c) = frame.at(y, xx, c);
      x.at(y, xx, 3) = mask.at(y, xx);
    }
  }
  for (const auto& layer : layers_) x = conv_relu(x, layer.out_channels, layer.stride, layer.weights);
  FeatureMap out(x.height(), x.width(), x.channels(), spec_.stride);
  std::copy(x.data().begin(), x.data().end(), out.data().begin());
  return out;
}

FeatureMap encode(const Frame& frame, const HoleMask& mask, const EncoderSpec& spec) {
  return Encoder(spec).encode(frame, mask);
}

FeatureMap normalize_features(FeatureMap f) {
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      auto cell = f.pixel(y, x);
      double norm2 = 0.0;
      for (double v : cell) norm2 += v * v;
      if (norm2 == 0.0) continue;
      const double norm = std::sqrt(norm2);
      for (double& v : cell) v /= norm;
    }
  }
  return f;
}

}  // namespace cpi
