#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace cpi {

// Dense h x w x c raster of doubles, interleaved (HWC) storage.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, double fill = 0.0);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }
  bool empty() const { return data_.empty(); }

  double& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
  double at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }

  std::span<double> pixel(int y, int x) { return {data_.data() + index(y, x, 0), static_cast<std::size_t>(channels_)}; }
  std::span<const double> pixel(int y, int x) const {
    return {data_.data() + index(y, x, 0), static_cast<std::size_t>(channels_)};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }
  bool same_size(const Image& other) const { return height_ == other.height_ && width_ == other.width_; }

  bool operator==(const Image&) const = default;

 protected:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// RGB frame, values nominally in [0,1].
class Frame : public Image {
 public:
  Frame() = default;
  Frame(int height, int width, double fill = 0.0) : Image(height, width, 3, fill) {}
  explicit Frame(Image rgb);
};

// Single-channel real map (weights, saliency, c_mask, ...).
class Plane : public Image {
 public:
  Plane() = default;
  Plane(int height, int width, double fill = 0.0) : Image(height, width, 1, fill) {}
  explicit Plane(Image one_channel);
};

// Binary hole mask, 1 = missing pixel.
class HoleMask {
 public:
  HoleMask() = default;
  HoleMask(int height, int width, std::uint8_t fill = 0);

  int height() const { return height_; }
  int width() const { return width_; }
  std::uint8_t& at(int y, int x) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t at(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<std::uint8_t> data() { return data_; }
  std::span<const std::uint8_t> data() const { return data_; }

  std::size_t hole_count() const;
  bool has_hole() const { return hole_count() > 0; }

  bool operator==(const HoleMask&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> data_;
};

// Visibility in [0,1], 1 = fully visible. `binary` promises values in {0,1}.
class VisibilityMap : public Plane {
 public:
  VisibilityMap() = default;
  VisibilityMap(int height, int width, double fill, bool binary) : Plane(height, width, fill), binary_(binary) {}
  VisibilityMap(Plane values, bool binary) : Plane(std::move(values)), binary_(binary) {}

  bool binary() const { return binary_; }
  double sum() const;

  bool operator==(const VisibilityMap&) const = default;

 private:
  bool binary_ = false;
};

struct VideoClip {
  std::vector<Frame> frames;
  std::vector<HoleMask> masks;

  std::size_t size() const { return frames.size(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
  int width() const { return frames.empty() ? 0 : frames.front().width(); }

  // Throws InvalidArgument unless N >= 1 and every frame/mask shares dimensions.
  void validate() const;
};

// Throws InvalidArgument unless H, W >= 8 and every value is finite and in [0,1].
void check_frame(const Frame& frame);

}  // namespace cpi
