#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpi/image.hpp"

namespace cpi {

// h x w x C feature map; one cell covers stride x stride image pixels.
class FeatureMap : public Image {
 public:
  FeatureMap() = default;
  FeatureMap(int height, int width, int channels, int stride, double fill = 0.0)
      : Image(height, width, channels, fill), stride_(stride) {}

  int stride() const { return stride_; }

  bool operator==(const FeatureMap&) const = default;

 private:
  int stride_ = 1;
};

enum class EncoderKind { kRawPool, kSeededConv };

std::string to_string(EncoderKind kind);
EncoderKind encoder_kind_from_string(const std::string& name);

struct EncoderSpec {
  EncoderKind kind = EncoderKind::kRawPool;
  int stride = 4;
  int channels = 32;  // seeded-conv only; raw-pool always yields 3
  std::uint64_t seed = 0;
  int layers = 3;  // seeded-conv only

  int output_channels() const { return kind == EncoderKind::kRawPool ? 3 : channels; }
  void validate() const;
};

// Fixed-weight encoder. Seeded-conv weights are drawn once at construction.
class Encoder {
 public:
  explicit Encoder(EncoderSpec spec);

  const EncoderSpec& spec() const { return spec_; }
  FeatureMap encode(const Frame& frame, const HoleMask& mask) const;

 private:
  struct ConvLayer {
    int in_channels = 0;
    int out_channels = 0;
    int stride = 1;
    std::vector<double> weights;  // [out][in][3][3]
  };

  EncoderSpec spec_;
  std::vector<ConvLayer> layers_;
};

FeatureMap encode(const Frame& frame, const HoleMask& mask, const EncoderSpec& spec);

// Scales each cell's channel vector to unit L2 norm; zero vectors stay zero.
FeatureMap normalize_features(FeatureMap f);

}  // namespace cpi
