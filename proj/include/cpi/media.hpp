#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cpi/image.hpp"

namespace cpi {

// Mask files store gray values; a pixel with gray >= kHoleThreshold is a hole.
inline constexpr int kHoleThreshold = 128;

// Regular .png files in `dir`, sorted lexicographically by filename.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

Frame read_frame(const std::filesystem::path& file);
HoleMask read_mask(const std::filesystem::path& file);

// Values are clamped to [0,1] and rounded to 8 bits.
void write_frame(const Frame& frame, const std::filesystem::path& file);
void write_mask(const HoleMask& mask, const std::filesystem::path& file);
// Single-channel image; values are clamped to [0,1] and scaled by 255.
void write_gray(const Plane& plane, const std::filesystem::path& file);

// Pairs frame_dir and mask_dir files by sorted position.
VideoClip load_clip(const std::filesystem::path& frame_dir, const std::filesystem::path& mask_dir);

// Loads frames only; every mask is empty.
VideoClip load_frames(const std::filesystem::path& frame_dir);

// Writes frames as 00000.png, 00001.png, ... Masks are written to `mask_dir` when given.
void save_clip(const VideoClip& clip, const std::filesystem::path& out_dir,
               const std::filesystem::path& mask_dir = {});

// Zero-padded frame filename for index i.
std::string frame_filename(std::size_t i);

VisibilityMap mask_to_visibility(const HoleMask& mask);
HoleMask visibility_to_mask(const VisibilityMap& v);

// Block-min downsampling. Dimensions not divisible by `factor` are padded by edge
// replication first, so the output is ceil(H/factor) x ceil(W/factor).
VisibilityMap downsample_visibility(const VisibilityMap& v, int factor);

}  // namespace cpi
