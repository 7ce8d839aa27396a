#include "cpi/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cpi/errors.hpp"

namespace cpi {

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 0 || width < 0 || channels < 1) {
    throw InvalidArgument("image dimensions must be non-negative with at least one channel");
  }
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Frame::Frame(Image rgb) : Image(std::move(rgb)) {
  if (channels_ != 3) throw InvalidArgument("frame requires 3 channels, got " + std::to_string(channels_));
}

Plane::Plane(Image one_channel) : Image(std::move(one_channel)) {
  if (channels_ != 1) throw InvalidArgument("plane requires 1 channel, got " + std::to_string(channels_));
}

HoleMask::HoleMask(int height, int width, std::uint8_t fill) : height_(height), width_(width) {
  if (height < 0 || width < 0) throw InvalidArgument("mask dimensions must be non-negative");
  if (fill > 1) throw InvalidArgument("mask values must be 0 or 1");
  data_.assign(static_cast<std::size_t>(height) * width, fill);
}

std::size_t HoleMask::hole_count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

double VisibilityMap::sum() const {
  auto values = data();
  return std::accumulate(values.begin(), values.end(), 0.0);
}

void VideoClip::validate() const {
  if (frames.empty()) throw InvalidArgument("clip has no frames");
  if (masks.size() != frames.size()) throw InvalidArgument("clip frame/mask count mismatch");
  const int h = frames.front().height();
  const int w = frames.front().width();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].height() != h || frames[i].width() != w || masks[i].height() != h || masks[i].width() != w) {
      throw InvalidArgument("clip frame " + std::to_string(i) + " has mismatched dimensions");
    }
  }
}

void check_frame(const Frame& frame) {
  if (frame.height() < 8 || frame.width() < 8) throw InvalidArgument("frame must be at least 8x8");
  for (double v : frame.data()) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw InvalidArgument("frame values must be finite and in [0,1]");
  }
}

}  // namespace cpi
