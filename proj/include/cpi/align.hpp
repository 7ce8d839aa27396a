#pragma once

#include <array>
#include <string>
#include <vector>

#include "cpi/image.hpp"

namespace cpi {

// Affine map from target coordinates to reference coordinates, both normalized to
// [-1,1] per axis over pixel extents (pixel x has center u = (2x+1)/W - 1):
//   p_ref = [a11 a12; a21 a22] * p_tgt + (tx, ty)
struct AffineParams {
  double a11 = 1.0;
  double a12 = 0.0;
  double a21 = 0.0;
  double a22 = 1.0;
  double tx = 0.0;
  double ty = 0.0;

  static AffineParams identity() { return {}; }
  static AffineParams from_array(const std::array<double, 6>& p) { return {p[0], p[1], p[2], p[3], p[4], p[5]}; }
  std::array<double, 6> to_array() const { return {a11, a12, a21, a22, tx, ty}; }

  double det() const { return a11 * a22 - a12 * a21; }
  bool finite() const;
  // |det| >= kMinAffineDet and all entries finite.
  bool non_degenerate() const;

  bool operator==(const AffineParams&) const = default;
};

inline constexpr double kMinAffineDet = 1e-4;

// The same kind of map expressed on pixel indices: x' = m[0]*x + m[1]*y + m[2], y' = m[3]*x + m[4]*y + m[5].
struct PixelAffine {
  std::array<double, 6> m{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

  double map_x(double x, double y) const { return m[0] * x + m[1] * y + m[2]; }
  double map_y(double x, double y) const { return m[3] * x + m[4] * y + m[5]; }
};

// Conversions for a target and source raster of the same size (width x height).
PixelAffine to_pixel_affine(const AffineParams& a, int width, int height);
AffineParams from_pixel_affine(const PixelAffine& p, int width, int height);

PixelAffine compose_pixel(const PixelAffine& a, const PixelAffine& b);  // a(b(p))
PixelAffine invert_pixel(const PixelAffine& a);

// result(p) = a(b(p)).
AffineParams compose_affine(const AffineParams& a, const AffineParams& b);
// Throws InvalidArgument when |det| < kMinAffineDet.
AffineParams invert_affine(const AffineParams& a);

// Largest distance, in reference pixels, between where `estimate` and `truth` send the
// four target corner pixels.
double corner_error_px(const AffineParams& estimate, const AffineParams& truth, int width, int height);

// Bilinear sample of channel c at fractional pixel position. The caller guarantees
// 0 <= x <= W-1 and 0 <= y <= H-1.
double sample_bilinear(const Image& img, double x, double y, int c);

// True when (x, y) lies within the sampling domain [0,W-1] x [0,H-1].
bool inside_raster(const Image& img, double x, double y);

// Resamples `src` onto an out_h x out_w grid: out(p) = src(m(p)). Out-of-raster
// samples are 0; `inbounds` (optional) receives the in-raster indicator.
Image warp_pixel_affine(const Image& src, int out_h, int out_w, const PixelAffine& m, Plane* inbounds = nullptr);

struct WarpResult {
  Frame image;
  VisibilityMap visibility;
};

// Aligned reference: bilinear sample of img at A(p). Visibility is the sampled
// visibility times the in-bounds indicator, binarized at kVisibilityBinarizeThreshold
// when `binary_visibility`.
WarpResult warp_affine(const Frame& img, const VisibilityMap& v, const AffineParams& a, bool binary_visibility = true);

inline constexpr double kVisibilityBinarizeThreshold = 0.999;

enum class AlignInit { kIdentity, kPrevious };

struct AlignConfig {
  int pyramid_levels = 4;
  int max_iters_per_level = 100;
  double tolerance = 1e-5;  // relative objective decrease that ends a level
  double charbonnier_eps = 1e-3;
  AlignInit init = AlignInit::kPrevious;
  // Exhaustive search around the initialization at the coarsest level before refinement.
  bool coarse_search = true;
  double search_translation = 0.125;  // +- fraction of the frame extent
  double search_rotation_deg = 10.0;
  double search_scale = 0.1;
  int search_candidates = 3;  // best grid points refined at the coarsest level

  void validate() const;
};

struct AlignTracePoint {
  int level = 0;  // 0 = finest
  int iter = 0;
  double objective = 0.0;
};

struct AlignResult {
  AffineParams params;
  double objective = 0.0;          // at `params`, finest level
  double initial_objective = 0.0;  // at the initialization, finest level
  std::vector<AlignTracePoint> trace;
};

// Value and parameter gradient of the masked, visibility-normalized Charbonnier
// objective at one resolution:
//   f(A) = sum_p V(p) sum_c sqrt((ref_c(A p) - target_c(p))^2 + eps^2) / sum_p V(p),
//   V = v_t * binarize(warped v_r * in-bounds).
// The gradient treats V as fixed.
struct AlignObjective {
  double value = 0.0;
  double support = 0.0;  // sum of V
  std::array<double, 6> gradient{};
};

AlignObjective alignment_objective(const Frame& target, const VisibilityMap& v_t, const Frame& ref,
                                   const VisibilityMap& v_r, const AffineParams& a, double eps);

// Same objective with an explicit, fixed joint visibility map (ignores warped visibility).
AlignObjective alignment_objective_fixed(const Frame& target, const Frame& ref, const Plane& joint_visibility,
                                         const AffineParams& a, double eps);

// Coarse-to-fine Levenberg-Marquardt minimization of alignment_objective starting from
// `init` (or from the best coarse-search candidates around it). Steps are kept only when the objective decreases. Throws NumericError when the
// joint visibility at the coarsest level covers < 1% of pixels or the objective is not finite.
AlignResult estimate_affine(const Frame& target, const VisibilityMap& v_t, const Frame& ref,
                            const VisibilityMap& v_r, const AlignConfig& cfg,
                            const AffineParams& init = AffineParams::identity());

// Writes level,iter,objective rows.
std::string trace_to_csv(const std::vector<AlignTracePoint>& trace);

// 2x2 box downsampling (edge replicated for odd sizes).
Frame downsample_frame(const Frame& frame);

}  // namespace cpi
