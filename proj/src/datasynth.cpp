#include "cpi/datasynth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cpi/errors.hpp"

namespace cpi {

void SynthParams::validate() const {
  if (n_frames < 1) throw InvalidArgument("n_frames must be >= 1");
  if (out_size < 8) throw InvalidArgument("out_size must be >= 8");
  for (double r : {rotation_deg, shear_deg, scale, translation, mask_rotation_deg, mask_translation}) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument("motion ranges must be finite and >= 0");
  }
  if (scale >= 1.0) throw InvalidArgument("scale range must be < 1");
  if (!(mask_scale_max > 0.0 && mask_scale_max <= 1.0)) throw InvalidArgument("mask_scale_max must be in (0, 1]");
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

PixelAffine translation(double tx, double ty) { return PixelAffine{{1.0, 0.0, tx, 0.0, 1.0, ty}}; }

// Linear part L about centre c: p -> c + L (p - c) + t.
PixelAffine about(double c, const double l[4], double tx, double ty) {
  return PixelAffine{{l[0], l[1], c - l[0] * c - l[1] * c + tx, l[2], l[3], c - l[2] * c - l[3] * c + ty}};
}

bool viewport_inside(const PixelAffine& m, int out, int src_h, int src_w) {
  const double last = out - 1;
  for (double y : {0.0, last})
    for (double x : {0.0, last}) {
      const double sx = m.map_x(x, y);
      const double sy = m.map_y(x, y);
      if (sx < 0.0 || sy < 0.0 || sx > src_w - 1 || sy > src_h - 1) return false;
    }
  return true;
}

}  // namespace

Background synth_background(const Frame& source, const SynthParams& p, std::mt19937_64& rng) {
  p.validate();
  if (source.height() < p.out_size || source.width() < p.out_size) {
    throw InvalidArgument("source image is smaller than out_size");
  }
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double c = (p.out_size - 1) / 2.0;
  // Walk in crop coordinates: W_k maps frame k pixels to frame-1 pixels.
  std::vector<PixelAffine> walk{translation(0.0, 0.0)};
  for (int k = 1; k < p.n_frames; ++k) {
    const double rot = p.rotation_deg * kDeg * u(rng);
    const double shear = std::tan(p.shear_deg * kDeg * u(rng));
    const double s = 1.0 + p.scale * u(rng);
    const double tx = p.translation * u(rng);
    const double ty = p.translation * u(rng);
    const double cr = std::cos(rot), sr = std::sin(rot);
    // R * Shear_x * s
    const double l[4] = {s * cr, s * (cr * shear - sr), s * sr, s * (sr * shear + cr)};
    walk.push_back(compose_pixel(walk.back(), about(c, l, tx, ty)));
  }

  std::uniform_int_distribution<int> oy(0, source.height() - p.out_size);
  std::uniform_int_distribution<int> ox(0, source.width() - p.out_size);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const PixelAffine origin = translation(ox(rng), oy(rng));
    Background bg;
    bool inside = true;
    for (const PixelAffine& w : walk) {
      bg.viewports.push_back(compose_pixel(origin, w));
      if (!viewport_inside(bg.viewports.back(), p.out_size, source.height(), source.width())) {
        inside = false;
        break;
      }
    }
    if (!inside) continue;
    for (const PixelAffine& v : bg.viewports) bg.frames.push_back(Frame(warp_pixel_affine(source, p.out_size, p.out_size, v)));
    return bg;
  }
  throw InvalidArgument("could not place the viewport walk inside the source after 100 attempts");
}

std::vector<HoleMask> synth_mask_sequence(const HoleMask& object_mask, const SynthParams& p, std::mt19937_64& rng) {
  p.validate();
  int y0 = object_mask.height(), y1 = -1, x0 = object_mask.width(), x1 = -1;
  for (int y = 0; y < object_mask.height(); ++y)
    for (int x = 0; x < object_mask.width(); ++x) {
      if (!object_mask.at(y, x)) continue;
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
    }
  if (y1 < 0) throw InvalidArgument("object mask is empty");

  Plane obj(object_mask.height(), object_mask.width());
  for (int y = 0; y < obj.height(); ++y)
    for (int x = 0; x < obj.width(); ++x) obj.at(y, x) = object_mask.at(y, x) ? 1.0 : 0.0;

  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double extent = std::max(y1 - y0 + 1, x1 - x0 + 1);
  const double largest = p.mask_scale_max * p.out_size / extent;
  const double s = largest * (0.5 + 0.5 * unit(rng));
  const double ocx = (x0 + x1) / 2.0;
  const double ocy = (y0 + y1) / 2.0;
  // Radius of the scaled bounding box under any rotation.
  const double radius = 0.5 * s * std::hypot(x1 - x0 + 1, y1 - y0 + 1);
  const double last = p.out_size - 1;
  auto clamp_centre = [&](double v) {
    const double lo = std::min(radius, last / 2.0);
    return std::clamp(v, lo, last - lo);
  };
  double cx = clamp_centre(last * unit(rng));
  double cy = clamp_centre(last * unit(rng));
  double angle = 0.0;

  std::vector<HoleMask> masks;
  for (int k = 0; k < p.n_frames; ++k) {
    if (k > 0) {
      angle += p.mask_rotation_deg * kDeg * u(rng);
      cx = clamp_centre(cx + p.mask_translation * u(rng));
      cy = clamp_centre(cy + p.mask_translation * u(rng));
    }
    // Output pixel -> object pixel: rotate by -angle about (cx, cy), scale by 1/s.
    const double ca = std::cos(angle) / s, sa = std::sin(angle) / s;
    const PixelAffine m{{ca, sa, ocx - ca * cx - sa * cy, -sa, ca, ocy + sa * cx - ca * cy}};
    const Image sampled = warp_pixel_affine(obj, p.out_size, p.out_size, m);
    HoleMask mask(p.out_size, p.out_size);
    for (int y = 0; y < p.out_size; ++y)
      for (int x = 0; x < p.out_size; ++x) mask.at(y, x) = sampled.at(y, x, 0) >= 0.5 ? 1 : 0;
    masks.push_back(std::move(mask));
  }
  return masks;
}

SynthClip composite_holes(const std::vector<Frame>& bg, const std::vector<HoleMask>& masks) {
  if (bg.size() != masks.size() || bg.empty()) throw InvalidArgument("composite_holes: length mismatch");
  SynthClip out;
  for (std::size_t k = 0; k < bg.size(); ++k) {
    if (bg[k].height() != masks[k].height() || bg[k].width() != masks[k].width() ||
        !bg[k].same_shape(bg.front())) {
      throw InvalidArgument("composite_holes: size mismatch");
    }
    Frame holed = bg[k];
    for (int y = 0; y < holed.height(); ++y)
      for (int x = 0; x < holed.width(); ++x)
        if (masks[k].at(y, x))
          for (int c = 0; c < 3; ++c) holed.at(y, x, c) = 0.0;
    out.input.frames.push_back(std::move(holed));
    out.input.masks.push_back(masks[k]);
    out.truth.frames.push_back(bg[k]);
    out.truth.masks.push_back(HoleMask(holed.height(), holed.width()));
  }
  return out;
}

Frame procedural_source(int height, int width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Wave {
    double kx, ky, phase, amp;
  };
  std::vector<Wave> waves[3];
  for (auto& list : waves) {
    for (int i = 0; i < 10; ++i) {
      const double wavelength = 8.0 * std::pow(12.0, unit(rng));
      const double dir = 2.0 * std::numbers::pi * unit(rng);
      const double k = 2.0 * std::numbers::pi / wavelength;
      list.push_back({k * std::cos(dir), k * std::sin(dir), 2.0 * std::numbers::pi * unit(rng), unit(rng)});
    }
  }
  Frame f(height, width);
  for (int c = 0; c < 3; ++c) {
    double total = 0.0;
    for (const Wave& w : waves[c]) total += w.amp;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double v = 0.0;
        for (const Wave& w : waves[c]) v += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
        f.at(y, x, c) = 0.5 + 0.45 * v / total;
      }
  }
  return f;
}

HoleMask procedural_object_mask(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Union of a few random ellipses around the centre.
  HoleMask m(size, size);
  const double c = (size - 1) / 2.0;
  const int blobs = 2 + static_cast<int>(unit(rng) * 3);
  for (int b = 0; b < blobs; ++b) {
    const double bx = c + (unit(rng) - 0.5) * size * 0.3;
    const double by = c + (unit(rng) - 0.5) * size * 0.3;
    const double ra = size * (0.12 + 0.15 * unit(rng));
    const double rb = size * (0.12 + 0.15 * unit(rng));
    const double th = std::numbers::pi * unit(rng);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const double dx = x - bx, dy = y - by;
        const double u = (dx * std::cos(th) + dy * std::sin(th)) / ra;
        const double v = (-dx * std::sin(th) + dy * std::cos(th)) / rb;
        if (u * u + v * v <= 1.0) m.at(y, x) = 1;
      }
  }
  return m;
}

std::string synth_manifest(const SynthParams& p) {
  std::ostringstream out;
  out.precision(17);
  out << "seed=" << p.seed << "\n"
      << "n_frames=" << p.n_frames << "\n"
      << "out_size=" << p.out_size << "\n"
      << "rotation_deg=" << p.rotation_deg << "\n"
      << "shear_deg=" << p.shear_deg << "\n"
      << "scale=" << p.scale << "\n"
      << "translation=" << p.translation << "\n"
      << "mask_scale_max=" << p.mask_scale_max << "\n"
      << "mask_rotation_deg=" << p.mask_rotation_deg << "\n"
      << "mask_translation=" << p.mask_translation << "\n";
  return out.str();
}

}  // namespace cpi
