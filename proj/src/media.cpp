#include "cpi/media.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdio>
#include <system_error>

#include "cpi/errors.hpp"

namespace fs = std::filesystem;

namespace cpi {
namespace {

// Decodes `file` into 8-bit samples of the requested libpng format.
std::vector<std::uint8_t> decode_png(const fs::path& file, png_uint_32 format, int& height, int& width) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, file.string().c_str())) {
    throw IoError("cannot decode " + file.string() + ": " + image.message);
  }
  image.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode " + file.string() + ": " + image.message);
  }
  height = static_cast<int>(image.height);
  width = static_cast<int>(image.width);
  return buffer;
}

void encode_png(const fs::path& file, png_uint_32 format, int height, int width, const std::vector<std::uint8_t>& buffer) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.format = format;
  image.height = static_cast<png_uint_32>(height);
  image.width = static_cast<png_uint_32>(width);
  if (!png_image_write_to_file(&image, file.string().c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("cannot write " + file.string() + ": " + image.message);
  }
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

std::vector<fs::path> list_images(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png") files.push_back(entry.path());
  }
  if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

Frame read_frame(const fs::path& file) {
  int h = 0;
  int w = 0;
  const auto bytes = decode_png(file, PNG_FORMAT_RGB, h, w);
  Frame frame(h, w);
  auto out = frame.data();
  for (std::size_t i = 0; i < bytes.size(); ++i) out[i] = bytes[i] / 255.0;
  return frame;
}

HoleMask read_mask(const fs::path& file) {
  int h = 0;
  int w = 0;
  const auto bytes = decode_png(file, PNG_FORMAT_GRAY, h, w);
  HoleMask mask(h, w);
  auto out = mask.data();
  for (std::size_t i = 0; i < bytes.size(); ++i) out[i] = bytes[i] >= kHoleThreshold ? 1 : 0;
  return mask;
}

void write_frame(const Frame& frame, const fs::path& file) {
  std::vector<std::uint8_t> bytes(frame.data().size());
  std::transform(frame.data().begin(), frame.data().end(), bytes.begin(), quantize);
  encode_png(file, PNG_FORMAT_RGB, frame.height(), frame.width(), bytes);
}

void write_mask(const HoleMask& mask, const fs::path& file) {
  std::vector<std::uint8_t> bytes(mask.data().size());
  std::transform(mask.data().begin(), mask.data().end(), bytes.begin(),
                 [](std::uint8_t m) { return static_cast<std::uint8_t>(m ? 255 : 0); });
  encode_png(file, PNG_FORMAT_GRAY, mask.height(), mask.width(), bytes);
}

void write_gray(const Plane& plane, const fs::path& file) {
  std::vector<std::uint8_t> bytes(plane.data().size());
  std::transform(plane.data().begin(), plane.data().end(), bytes.begin(), quantize);
  encode_png(file, PNG_FORMAT_GRAY, plane.height(), plane.width(), bytes);
}

std::string frame_filename(std::size_t i) {
  char name[32];
  std::snprintf(name, sizeof(name), "%05zu.png", i);
  return name;
}

VideoClip load_clip(const fs::path& frame_dir, const fs::path& mask_dir) {
  const auto frame_files = list_images(frame_dir);
  const auto mask_files = list_images(mask_dir);
  if (frame_files.empty()) throw IoError("no frames found in " + frame_dir.string());
  if (frame_files.size() != mask_files.size()) {
    throw IoError("frame/mask count mismatch: " + std::to_string(frame_files.size()) + " frames, " +
                  std::to_string(mask_files.size()) + " masks");
  }
  VideoClip clip;
  for (std::size_t i = 0; i < frame_files.size(); ++i) {
    Frame frame = read_frame(frame_files[i]);
    HoleMask mask = read_mask(mask_files[i]);
    if (frame.height() != mask.height() || frame.width() != mask.width()) {
      throw IoError("dimension mismatch between " + frame_files[i].filename().string() + " and " +
                    mask_files[i].filename().string());
    }
    if (!clip.frames.empty() && !frame.same_shape(clip.frames.front())) {
      throw IoError("frame " + frame_files[i].filename().string() + " differs in size from the first frame");
    }
    clip.frames.push_back(std::move(frame));
    clip.masks.push_back(std::move(mask));
  }
  return clip;
}

VideoClip load_frames(const fs::path& frame_dir) {
  const auto frame_files = list_images(frame_dir);
  if (frame_files.empty()) throw IoError("no frames found in " + frame_dir.string());
  VideoClip clip;
  for (const auto& file : frame_files) {
    Frame frame = read_frame(file);
    if (!clip.frames.empty() && !frame.same_shape(clip.frames.front())) {
      throw IoError("frame " + file.filename().string() + " differs in size from the first frame");
    }
    clip.masks.emplace_back(frame.height(), frame.width());
    clip.frames.push_back(std::move(frame));
  }
  return clip;
}

void save_clip(const VideoClip& clip, const fs::path& out_dir, const fs::path& mask_dir) {
  ensure_directory(out_dir);
  if (!mask_dir.empty()) ensure_directory(mask_dir);
  for (std::size_t i = 0; i < clip.frames.size(); ++i) {
    write_frame(clip.frames[i], out_dir / frame_filename(i));
    if (!mask_dir.empty() && i < clip.masks.size()) write_mask(clip.masks[i], mask_dir / frame_filename(i));
  }
}

VisibilityMap mask_to_visibility(const HoleMask& mask) {
  VisibilityMap v(mask.height(), mask.width(), 0.0, true);
  auto out = v.data();
  auto in = mask.data();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = 1.0 - in[i];
  return v;
}

HoleMask visibility_to_mask(const VisibilityMap& v) {
  HoleMask mask(v.height(), v.width());
  auto out = mask.data();
  auto in = v.data();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] < 1.0 ? 1 : 0;
  return mask;
}

VisibilityMap downsample_visibility(const VisibilityMap& v, int factor) {
  if (factor <= 0) throw InvalidArgument("downsample factor must be positive");
  const int h = (v.height() + factor - 1) / factor;
  const int w = (v.width() + factor - 1) / factor;
  VisibilityMap out(h, w, 0.0, v.binary());
  for (int cy = 0; cy < h; ++cy) {
    for (int cx = 0; cx < w; ++cx) {
      double lowest = 1.0;
      for (int dy = 0; dy < factor; ++dy) {
        // Edge replication for the padded tail.
        const int y = std::min(cy * factor + dy, v.height() - 1);
        for (int dx = 0; dx < factor; ++dx) {
          const int x = std::min(cx * factor + dx, v.width() - 1);
          lowest = std::min(lowest, v.at(y, x));
        }
      }
      out.at(cy, cx) = lowest;
    }
  }
  return out;
}

}  // namespace cpi
