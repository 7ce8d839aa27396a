#include "cpi/align.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "cpi/errors.hpp"
#include "cpi/media.hpp"

namespace cpi {

bool AffineParams::finite() const {
  const auto p = to_array();
  return std::all_of(p.begin(), p.end(), [](double v) { return std::isfinite(v); });
}

bool AffineParams::non_degenerate() const { return finite() && std::abs(det()) >= kMinAffineDet; }

PixelAffine to_pixel_affine(const AffineParams& a, int width, int height) {
  const double w = width;
  const double h = height;
  // Pixel centers measured from the raster center.
  const double c0x = 0.5 - w / 2.0;
  const double c0y = 0.5 - h / 2.0;
  const double m01 = a.a12 * (w / h);
  const double m10 = a.a21 * (h / w);
  const double bx = (w / 2.0) * (a.tx + 1.0) - 0.5;
  const double by = (h / 2.0) * (a.ty + 1.0) - 0.5;
  PixelAffine p;
  p.m = {a.a11, m01, a.a11 * c0x + m01 * c0y + bx, m10, a.a22, m10 * c0x + a.a22 * c0y + by};
  return p;
}

AffineParams from_pixel_affine(const PixelAffine& p, int width, int height) {
  const double w = width;
  const double h = height;
  const double c0x = 0.5 - w / 2.0;
  const double c0y = 0.5 - h / 2.0;
  AffineParams a;
  a.a11 = p.m[0];
  a.a12 = p.m[1] * (h / w);
  a.a21 = p.m[3] * (w / h);
  a.a22 = p.m[4];
  const double bx = p.m[2] - p.m[0] * c0x - p.m[1] * c0y;
  const double by = p.m[5] - p.m[3] * c0x - p.m[4] * c0y;
  a.tx = (bx + 0.5) * 2.0 / w - 1.0;
  a.ty = (by + 0.5) * 2.0 / h - 1.0;
  return a;
}

PixelAffine compose_pixel(const PixelAffine& a, const PixelAffine& b) {
  const auto& x = a.m;
  const auto& y = b.m;
  PixelAffine r;
  r.m = {x[0] * y[0] + x[1] * y[3], x[0] * y[1] + x[1] * y[4], x[0] * y[2] + x[1] * y[5] + x[2],
         x[3] * y[0] + x[4] * y[3], x[3] * y[1] + x[4] * y[4], x[3] * y[2] + x[4] * y[5] + x[5]};
  return r;
}

PixelAffine invert_pixel(const PixelAffine& a) {
  const auto& m = a.m;
  const double det = m[0] * m[4] - m[1] * m[3];
  if (!std::isfinite(det) || std::abs(det) < 1e-12) throw InvalidArgument("pixel affine is singular");
  const double i00 = m[4] / det;
  const double i01 = -m[1] / det;
  const double i10 = -m[3] / det;
  const double i11 = m[0] / det;
  PixelAffine r;
  r.m = {i00, i01, -(i00 * m[2] + i01 * m[5]), i10, i11, -(i10 * m[2] + i11 * m[5])};
  return r;
}

AffineParams compose_affine(const AffineParams& a, const AffineParams& b) {
  AffineParams r;
  r.a11 = a.a11 * b.a11 + a.a12 * b.a21;
  r.a12 = a.a11 * b.a12 + a.a12 * b.a22;
  r.a21 = a.a21 * b.a11 + a.a22 * b.a21;
  r.a22 = a.a21 * b.a12 + a.a22 * b.a22;
  r.tx = a.a11 * b.tx + a.a12 * b.ty + a.tx;
  r.ty = a.a21 * b.tx + a.a22 * b.ty + a.ty;
  return r;
}

AffineParams invert_affine(const AffineParams& a) {
  if (!a.non_degenerate()) throw InvalidArgument("cannot invert a degenerate affine transform");
  const double det = a.det();
  AffineParams r;
  r.a11 = a.a22 / det;
  r.a12 = -a.a12 / det;
  r.a21 = -a.a21 / det;
  r.a22 = a.a11 / det;
  r.tx = -(r.a11 * a.tx + r.a12 * a.ty);
  r.ty = -(r.a21 * a.tx + r.a22 * a.ty);
  return r;
}

double corner_error_px(const AffineParams& estimate, const AffineParams& truth, int width, int height) {
  const PixelAffine e = to_pixel_affine(estimate, width, height);
  const PixelAffine t = to_pixel_affine(truth, width, height);
  const double xs[2] = {0.0, width - 1.0};
  const double ys[2] = {0.0, height - 1.0};
  double worst = 0.0;
  for (double y : ys) {
    for (double x : xs) {
      worst = std::max(worst, std::hypot(e.map_x(x, y) - t.map_x(x, y), e.map_y(x, y) - t.map_y(x, y)));
    }
  }
  return worst;
}

namespace {

constexpr double kEdgeSlack = 1e-9;

struct BilinearTap {
  int x0, x1, y0, y1;
  double fx, fy;
};

BilinearTap make_tap(const Image& img, double x, double y) {
  x = std::clamp(x, 0.0, img.width() - 1.0);
  y = std::clamp(y, 0.0, img.height() - 1.0);
  BilinearTap t;
  t.x0 = static_cast<int>(std::floor(x));
  t.y0 = static_cast<int>(std::floor(y));
  t.fx = x - t.x0;
  t.fy = y - t.y0;
  t.x1 = std::min(t.x0 + 1, img.width() - 1);
  t.y1 = std::min(t.y0 + 1, img.height() - 1);
  return t;
}

double interpolate(const Image& img, const BilinearTap& t, int c) {
  const double top = (1.0 - t.fx) * img.at(t.y0, t.x0, c) + t.fx * img.at(t.y0, t.x1, c);
  const double bottom = (1.0 - t.fx) * img.at(t.y1, t.x0, c) + t.fx * img.at(t.y1, t.x1, c);
  return (1.0 - t.fy) * top + t.fy * bottom;
}

}  // namespace

bool inside_raster(const Image& img, double x, double y) {
  return x >= -kEdgeSlack && y >= -kEdgeSlack && x <= img.width() - 1.0 + kEdgeSlack &&
         y <= img.height() - 1.0 + kEdgeSlack;
}

double sample_bilinear(const Image& img, double x, double y, int c) { return interpolate(img, make_tap(img, x, y), c); }

Image warp_pixel_affine(const Image& src, int out_h, int out_w, const PixelAffine& m, Plane* inbounds) {
  Image out(out_h, out_w, src.channels());
  if (inbounds) *inbounds = Plane(out_h, out_w);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const double sx = m.map_x(x, y);
      const double sy = m.map_y(x, y);
      if (!inside_raster(src, sx, sy)) continue;
      const BilinearTap tap = make_tap(src, sx, sy);
      for (int c = 0; c < src.channels(); ++c) out.at(y, x, c) = interpolate(src, tap, c);
      if (inbounds) inbounds->at(y, x) = 1.0;
    }
  }
  return out;
}

WarpResult warp_affine(const Frame& img, const VisibilityMap& v, const AffineParams& a, bool binary_visibility) {
  if (!v.same_size(img)) throw InvalidArgument("warp_affine: visibility size differs from image");
  if (!a.non_degenerate()) throw InvalidArgument("warp_affine: degenerate affine transform");
  const PixelAffine m = to_pixel_affine(a, img.width(), img.height());
  Plane inbounds;
  Frame warped(warp_pixel_affine(img, img.height(), img.width(), m, &inbounds));
  Plane vis(warp_pixel_affine(v, img.height(), img.width(), m));
  auto values = vis.data();
  auto in = inbounds.data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] *= in[i];
    if (binary_visibility) values[i] = values[i] >= kVisibilityBinarizeThreshold ? 1.0 : 0.0;
  }
  return {std::move(warped), VisibilityMap(std::move(vis), binary_visibility)};
}

void AlignConfig::validate() const {
  if (pyramid_levels < 1) throw InvalidArgument("align.pyramid_levels must be >= 1");
  if (max_iters_per_level < 1) throw InvalidArgument("align.max_iters must be >= 1");
  if (!(charbonnier_eps > 0.0)) throw InvalidArgument("align.charbonnier_eps must be > 0");
  if (!(tolerance >= 0.0)) throw InvalidArgument("align.tolerance must be >= 0");
  if (search_translation < 0.0 || search_rotation_deg < 0.0 || search_scale < 0.0 || search_scale >= 1.0) {
    throw InvalidArgument("align search ranges must be non-negative (scale < 1)");
  }
  if (search_candidates < 1) throw InvalidArgument("align.search_candidates must be >= 1");
}

Frame downsample_frame(const Frame& frame) {
  const int h = (frame.height() + 1) / 2;
  const int w = (frame.width() + 1) / 2;
  Frame out(h, w);
  for (int y = 0; y < h; ++y) {
    const int y0 = 2 * y;
    const int y1 = std::min(2 * y + 1, frame.height() - 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = 2 * x;
      const int x1 = std::min(2 * x + 1, frame.width() - 1);
      for (int c = 0; c < 3; ++c) {
        out.at(y, x, c) =
            0.25 * (frame.at(y0, x0, c) + frame.at(y0, x1, c) + frame.at(y1, x0, c) + frame.at(y1, x1, c));
      }
    }
  }
  return out;
}

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

struct Evaluation {
  double value = 0.0;
  double support = 0.0;
  Vec6 gradient = Vec6::Zero();
  Mat6 hessian = Mat6::Zero();  // IRLS Gauss-Newton approximation
};

// `v_r` may be null when `joint` supplies the full visibility.
Evaluation evaluate(const Frame& target, const Plane& v_t, const Frame& ref, const Plane* v_r, const AffineParams& a,
                    double eps, bool derivatives) {
  const int h = target.height();
  const int w = target.width();
  const double wd = w;
  const double hd = h;
  const PixelAffine m = to_pixel_affine(a, w, h);
  const double eps2 = eps * eps;
  Evaluation e;
  Vec6 jac;
  for (int y = 0; y < h; ++y) {
    const double cy = y + 0.5 - hd / 2.0;
    for (int x = 0; x < w; ++x) {
      const double weight_t = v_t.at(y, x);
      if (weight_t <= 0.0) continue;
      const double sx = m.map_x(x, y);
      const double sy = m.map_y(x, y);
      if (!inside_raster(ref, sx, sy)) continue;
      const BilinearTap tap = make_tap(ref, sx, sy);
      double weight = weight_t;
      if (v_r) {
        if (interpolate(*v_r, tap, 0) < kVisibilityBinarizeThreshold) continue;
      }
      e.support += weight;
      const double cx = x + 0.5 - wd / 2.0;
      for (int c = 0; c < 3; ++c) {
        const double r00 = ref.at(tap.y0, tap.x0, c);
        const double r01 = ref.at(tap.y0, tap.x1, c);
        const double r10 = ref.at(tap.y1, tap.x0, c);
        const double r11 = ref.at(tap.y1, tap.x1, c);
        const double top = (1.0 - tap.fx) * r00 + tap.fx * r01;
        const double bottom = (1.0 - tap.fx) * r10 + tap.fx * r11;
        const double value = (1.0 - tap.fy) * top + tap.fy * bottom;
        const double d = value - target.at(y, x, c);
        const double s = std::sqrt(d * d + eps2);
        e.value += weight * s;
        if (!derivatives) continue;
        const double gx = (1.0 - tap.fy) * (r01 - r00) + tap.fy * (r11 - r10);
        const double gy = bottom - top;
        jac << gx * cx, gx * (wd / hd) * cy, gy * (hd / wd) * cx, gy * cy, gx * wd / 2.0, gy * hd / 2.0;
        e.gradient.noalias() += (weight * d / s) * jac;
        e.hessian.selfadjointView<Eigen::Upper>().rankUpdate(jac, weight / s);
      }
    }
  }
  if (e.support > 0.0) {
    e.value /= e.support;
    e.gradient /= e.support;
    e.hessian /= e.support;
  }
  e.hessian = e.hessian.selfadjointView<Eigen::Upper>();
  return e;
}

AlignObjective to_objective(const Evaluation& e) {
  AlignObjective o;
  o.value = e.value;
  o.support = e.support;
  for (int i = 0; i < 6; ++i) o.gradient[i] = e.gradient(i);
  return o;
}

void check_inputs(const Frame& target, const VisibilityMap& v_t, const Frame& ref, const VisibilityMap& v_r) {
  if (!target.same_shape(ref)) throw InvalidArgument("alignment: target and reference differ in size");
  if (!v_t.same_size(target) || !v_r.same_size(ref)) throw InvalidArgument("alignment: visibility size mismatch");
}


// Levenberg-Marquardt on one pyramid level; returns the objective at the final `params`.
double refine_level(const Frame& target, const VisibilityMap& v_t, const Frame& ref, const VisibilityMap& v_r,
                    int level, const AlignConfig& cfg, AffineParams& params, std::vector<AlignTracePoint>& trace) {
  const double eps = cfg.charbonnier_eps;
  Evaluation current = evaluate(target, v_t, ref, &v_r, params, eps, true);
  if (!std::isfinite(current.value)) throw NumericError("non-finite alignment objective");
  trace.push_back({level, 0, current.value});
  double lambda = 1e-4;
  for (int iter = 1; iter <= cfg.max_iters_per_level; ++iter) {
    Mat6 system = current.hessian;
    for (int i = 0; i < 6; ++i) system(i, i) += lambda * current.hessian(i, i) + 1e-12;
    const Vec6 step = system.ldlt().solve(-current.gradient);
    if (!step.allFinite()) break;
    std::array<double, 6> p = params.to_array();
    for (int i = 0; i < 6; ++i) p[static_cast<std::size_t>(i)] += step(i);
    const AffineParams candidate = AffineParams::from_array(p);
    bool accepted = false;
    if (candidate.non_degenerate()) {
      Evaluation trial = evaluate(target, v_t, ref, &v_r, candidate, eps, true);
      if (trial.support > 0.0 && std::isfinite(trial.value) && trial.value < current.value) {
        const double decrease = (current.value - trial.value) / std::max(current.value, 1e-300);
        params = candidate;
        current = std::move(trial);
        trace.push_back({level, iter, current.value});
        lambda = std::max(lambda * 0.1, 1e-10);
        accepted = true;
        if (decrease < cfg.tolerance) break;
      }
    }
    if (!accepted) {
      lambda *= 10.0;
      if (lambda > 1e8) break;
    }
  }
  return current.value;
}

// Grid of similarity perturbations composed onto `center`; returns the lowest-objective ones.
std::vector<AffineParams> search_candidates(const Frame& target, const VisibilityMap& v_t, const Frame& ref,
                                            const VisibilityMap& v_r, const AffineParams& center,
                                            const AlignConfig& cfg) {
  const int w = target.width();
  const int h = target.height();
  // One coarse pixel per translation step.
  const int tx_steps = static_cast<int>(std::floor(cfg.search_translation * w));
  const int ty_steps = static_cast<int>(std::floor(cfg.search_translation * h));
  const std::vector<double> rotations = cfg.search_rotation_deg > 0.0
                                            ? std::vector<double>{-cfg.search_rotation_deg, -cfg.search_rotation_deg / 2,
                                                                  0.0, cfg.search_rotation_deg / 2, cfg.search_rotation_deg}
                                            : std::vector<double>{0.0};
  const std::vector<double> scales = cfg.search_scale > 0.0
                                         ? std::vector<double>{1.0 - cfg.search_scale, 1.0, 1.0 + cfg.search_scale}
                                         : std::vector<double>{1.0};
  const double cx = (w - 1) / 2.0;
  const double cy = (h - 1) / 2.0;
  std::vector<std::pair<double, AffineParams>> scored;
  for (double rot : rotations) {
    const double th = rot * std::numbers::pi / 180.0;
    for (double scale : scales) {
      const double c = scale * std::cos(th);
      const double s = scale * std::sin(th);
      for (int dy = -ty_steps; dy <= ty_steps; ++dy) {
        for (int dx = -tx_steps; dx <= tx_steps; ++dx) {
          PixelAffine g;
          g.m = {c, -s, cx - c * cx + s * cy + dx, s, c, cy - s * cx - c * cy + dy};
          const AffineParams candidate = compose_affine(from_pixel_affine(g, w, h), center);
          if (!candidate.non_degenerate()) continue;
          const Evaluation e = evaluate(target, v_t, ref, &v_r, candidate, cfg.charbonnier_eps, false);
          if (e.support < 0.01 * static_cast<double>(target.pixel_count()) || !std::isfinite(e.value)) continue;
          scored.emplace_back(e.value, candidate);
        }
      }
    }
  }
  std::vector<AffineParams> best{center};
  const std::size_t keep = std::min(scored.size(), static_cast<std::size_t>(cfg.search_candidates));
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                    [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < keep; ++i) best.push_back(scored[i].second);
  return best;
}

}  // namespace

AlignObjective alignment_objective(const Frame& target, const VisibilityMap& v_t, const Frame& ref,
                                   const VisibilityMap& v_r, const AffineParams& a, double eps) {
  check_inputs(target, v_t, ref, v_r);
  return to_objective(evaluate(target, v_t, ref, &v_r, a, eps, true));
}

AlignObjective alignment_objective_fixed(const Frame& target, const Frame& ref, const Plane& joint_visibility,
                                         const AffineParams& a, double eps) {
  if (!target.same_shape(ref) || !joint_visibility.same_size(target)) {
    throw InvalidArgument("alignment: shape mismatch");
  }
  return to_objective(evaluate(target, joint_visibility, ref, nullptr, a, eps, true));
}

AlignResult estimate_affine(const Frame& target, const VisibilityMap& v_t, const Frame& ref,
                            const VisibilityMap& v_r, const AlignConfig& cfg, const AffineParams& init) {
  check_inputs(target, v_t, ref, v_r);
  cfg.validate();
  if (!init.non_degenerate()) throw InvalidArgument("alignment: degenerate initialization");

  struct Level {
    Frame target, ref;
    VisibilityMap v_t, v_r;
  };
  std::vector<Level> pyramid;
  pyramid.push_back({target, ref, v_t, v_r});
  constexpr int kMinLevelSize = 16;
  while (static_cast<int>(pyramid.size()) < cfg.pyramid_levels) {
    const Level& fine = pyramid.back();
    if (std::min(fine.target.height(), fine.target.width()) < 2 * kMinLevelSize) break;
    Level coarse{downsample_frame(fine.target), downsample_frame(fine.ref), downsample_visibility(fine.v_t, 2),
                 downsample_visibility(fine.v_r, 2)};
    pyramid.push_back(std::move(coarse));
  }

  const double eps = cfg.charbonnier_eps;
  AlignResult result;
  AffineParams params = init;

  {
    const Level& top = pyramid.back();
    const Evaluation e = evaluate(top.target, top.v_t, top.ref, &top.v_r, params, eps, false);
    const double cells = static_cast<double>(top.target.pixel_count());
    if (e.support < 0.01 * cells) throw NumericError("insufficient joint visibility for alignment");
    if (!std::isfinite(e.value)) throw NumericError("non-finite alignment objective");
  }
  const Evaluation initial = evaluate(target, v_t, ref, &v_r, init, eps, false);

  const int coarsest = static_cast<int>(pyramid.size()) - 1;
  {
    const Level& top = pyramid.back();
    std::vector<AffineParams> starts{params};
    if (cfg.coarse_search) starts = search_candidates(top.target, top.v_t, top.ref, top.v_r, params, cfg);
    double best = std::numeric_limits<double>::infinity();
    std::vector<AlignTracePoint> best_trace;
    for (const AffineParams& start : starts) {
      std::vector<AlignTracePoint> trace;
      AffineParams refined = start;
      const double value = refine_level(top.target, top.v_t, top.ref, top.v_r, coarsest, cfg, refined, trace);
      if (value < best) {
        best = value;
        params = refined;
        best_trace = std::move(trace);
      }
    }
    result.trace = std::move(best_trace);
  }
  for (int level = coarsest - 1; level >= 0; --level) {
    const Level& lv = pyramid[static_cast<std::size_t>(level)];
    refine_level(lv.target, lv.v_t, lv.ref, lv.v_r, level, cfg, params, result.trace);
  }

  const Evaluation final_eval = evaluate(target, v_t, ref, &v_r, params, eps, false);
  if (!std::isfinite(final_eval.value)) throw NumericError("non-finite alignment objective");
  result.initial_objective = initial.value;
  if (final_eval.value <= initial.value) {
    result.params = params;
    result.objective = final_eval.value;
  } else {
    result.params = init;
    result.objective = initial.value;
  }
  return result;
}

std::string trace_to_csv(const std::vector<AlignTracePoint>& trace) {
  std::ostringstream out;
  out.precision(10);
  out << "level,iter,objective\n";
  for (const auto& t : trace) out << t.level << ',' << t.iter << ',' << t.objective << '\n';
  return out.str();
}

}  // namespace cpi
