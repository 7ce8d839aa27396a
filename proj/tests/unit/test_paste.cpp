#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cpi/errors.hpp"
#include "cpi/paste.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace cpi {
namespace {

TEST(UpsampleWeights, SingleFullyVisibleReferenceIsOne) {
  const auto out = upsample_weights({Plane(4, 5, 1.0)}, {VisibilityMap(16, 20, 1.0, true)}, 4);
  for (double x : out.weights[0].data()) EXPECT_EQ(x, 1.0);
  for (double x : out.c_mask.data()) EXPECT_EQ(x, 0.0);
}

TEST(UpsampleWeights, UniformHalvesStayHalves) {
  const auto out = upsample_weights({Plane(4, 4, 0.5), Plane(4, 4, 0.5)},
                                    {VisibilityMap(16, 16, 1.0, true), VisibilityMap(16, 16, 1.0, true)}, 4);
  for (int r = 0; r < 2; ++r)
    for (double x : out.weights[r].data()) EXPECT_EQ(x, 0.5);
}

TEST(UpsampleWeights, InvisibleReferenceIsZeroedAndRenormalized) {
  VisibilityMap v0(8, 8, 1.0, true);
  v0.at(3, 3) = 0.0;
  const auto out = upsample_weights({Plane(2, 2, 0.3), Plane(2, 2, 0.7)}, {v0, VisibilityMap(8, 8, 1.0, true)}, 4);
  EXPECT_EQ(out.weights[0].at(3, 3), 0.0);
  EXPECT_EQ(out.weights[1].at(3, 3), 1.0);
  EXPECT_NEAR(out.weights[0].at(0, 0), 0.3, 1e-15);
  EXPECT_EQ(out.c_mask.at(3, 3), 0.0);
}

TEST(UpsampleWeights, NothingVisibleGivesZeroWeightsAndMaskOne) {
  const auto out = upsample_weights({Plane(2, 2, 0.5), Plane(2, 2, 0.5)},
                                    {VisibilityMap(8, 8, 0.0, true), VisibilityMap(8, 8, 0.0, true)}, 4);
  for (int r = 0; r < 2; ++r)
    for (double x : out.weights[r].data()) EXPECT_EQ(x, 0.0);
  for (double x : out.c_mask.data()) EXPECT_EQ(x, 1.0);
}

TEST(UpsampleWeights, ZeroMassButVisibleFallsBackToTheta) {
  std::vector<Plane> c = {Plane(2, 2, 0.0), Plane(2, 2, 0.0)};
  std::vector<VisibilityMap> v = {VisibilityMap(8, 8, 1.0, true), VisibilityMap(8, 8, 1.0, true)};
  const double theta[2] = {0.0, std::log(3.0)};
  const auto out = upsample_weights(c, v, 4, theta);
  EXPECT_NEAR(out.weights[0].at(5, 5), 0.25, 1e-15);
  EXPECT_NEAR(out.weights[1].at(5, 5), 0.75, 1e-15);
  EXPECT_EQ(out.c_mask.at(5, 5), 0.0);
}

TEST(UpsampleWeights, PartitionOfUnityOnRandomInputs) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Plane> c;
    std::vector<VisibilityMap> v;
    for (int r = 0; r < 3; ++r) {
      c.push_back(testing::random_plane(5, 6, rng));
      v.push_back(testing::random_binary_visibility(18, 22, rng, 0.5));
    }
    const auto out = upsample_weights(c, v, 4);
    for (int y = 0; y < 18; ++y)
      for (int x = 0; x < 22; ++x) {
        double sum = 0.0;
        bool any = false;
        for (int r = 0; r < 3; ++r) {
          if (v[r].at(y, x) == 0.0) EXPECT_EQ(out.weights[r].at(y, x), 0.0);
          sum += out.weights[r].at(y, x);
          any = any || v[r].at(y, x) == 1.0;
        }
        EXPECT_NEAR(sum, any ? 1.0 : 0.0, 1e-12);
        EXPECT_EQ(out.c_mask.at(y, x), any ? 0.0 : 1.0);
      }
  }
}

TEST(UpsampleWeights, InconsistentStrideThrows) {
  EXPECT_THROW(upsample_weights({Plane(3, 3)}, {VisibilityMap(16, 16, 1.0, true)}, 4), InvalidArgument);
  EXPECT_THROW(upsample_weights({Plane(4, 4)}, {VisibilityMap(16, 16, 1.0, true)}, 0), InvalidArgument);
}

PasteInput two_ref_input(const Frame& target, const HoleMask& hole, const Frame& a, const Frame& b) {
  PasteInput in;
  in.target = target;
  in.hole = hole;
  in.warped_refs = {a, b};
  const int h = target.height();
  const int w = target.width();
  in.warped_vis = {VisibilityMap(h, w, 1.0, true), VisibilityMap(h, w, 1.0, true)};
  return in;
}

TEST(CompositePaste, NoHoleIsIdentity) {
  std::mt19937_64 rng(2);
  const Frame t = testing::random_frame(12, 12, rng);
  PasteInput in = two_ref_input(t, HoleMask(12, 12), testing::random_frame(12, 12, rng),
                                testing::random_frame(12, 12, rng));
  const auto w = upsample_weights({Plane(3, 3, 0.5), Plane(3, 3, 0.5)}, in.warped_vis, 4);
  EXPECT_TRUE(composite_paste(in, w).frame == t);
}

TEST(CompositePaste, WeightOneCopyIsExact) {
  std::mt19937_64 rng(3);
  const Frame truth = testing::random_frame(16, 16, rng);
  const HoleMask hole = testing::random_block_mask(16, 16, 0.3, rng, 2, 6);
  PasteInput in;
  in.target = testing::zero_holes(truth, hole);
  in.hole = hole;
  in.warped_refs = {truth};
  in.warped_vis = {VisibilityMap(16, 16, 1.0, true)};
  const auto w = upsample_weights({Plane(4, 4, 1.0)}, in.warped_vis, 4);
  const PasteResult out = composite_paste(in, w);
  EXPECT_TRUE(out.frame == truth);
  EXPECT_FALSE(out.fill_region.has_hole());
}

TEST(CompositePaste, QuarterThreeQuarterBlend) {
  const Frame t(8, 8, 0.5);
  HoleMask hole(8, 8);
  hole.at(4, 4) = 1;
  PasteInput in = two_ref_input(t, hole, Frame(8, 8, 0.0), Frame(8, 8, 1.0));
  const auto w = upsample_weights({Plane(2, 2, 0.25), Plane(2, 2, 0.75)}, in.warped_vis, 4);
  const PasteResult out = composite_paste(in, w);
  for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(out.frame.at(4, 4, c), 0.75);
}

TEST(CompositePaste, NonHoleBitExactAndHoleWithinBounds) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Frame t = testing::random_frame(20, 24, rng);
    const HoleMask hole = testing::random_block_mask(20, 24, 0.4, rng, 2, 8);
    PasteInput in = two_ref_input(t, hole, testing::random_frame(20, 24, rng), testing::random_frame(20, 24, rng));
    in.warped_vis[0] = testing::random_binary_visibility(20, 24, rng, 0.5);
    in.warped_vis[1] = testing::random_binary_visibility(20, 24, rng, 0.5);
    const auto w =
        upsample_weights({testing::random_plane(5, 6, rng), testing::random_plane(5, 6, rng)}, in.warped_vis, 4);
    const PasteResult out = composite_paste(in, w);
    for (int y = 0; y < 20; ++y)
      for (int x = 0; x < 24; ++x)
        for (int c = 0; c < 3; ++c) {
          const double v = out.frame.at(y, x, c);
          if (!hole.at(y, x)) {
            EXPECT_EQ(v, t.at(y, x, c));
            continue;
          }
          if (out.c_mask.at(y, x) == 1.0) {
            EXPECT_EQ(v, 0.0);
            EXPECT_EQ(out.fill_region.at(y, x), 1);
            continue;
          }
          double lo = INFINITY, hi = -INFINITY;
          for (int r = 0; r < 2; ++r) {
            if (w.weights[r].at(y, x) == 0.0) continue;
            lo = std::min(lo, in.warped_refs[r].at(y, x, c));
            hi = std::max(hi, in.warped_refs[r].at(y, x, c));
          }
          EXPECT_GE(v, lo - 1e-12);
          EXPECT_LE(v, hi + 1e-12);
        }
  }
}

TEST(CompositePaste, NoReferencesLeavesWholeHoleForFill) {
  HoleMask hole(8, 8);
  hole.at(1, 1) = 1;
  PasteInput in;
  in.target = Frame(8, 8, 0.3);
  in.hole = hole;
  const PasteResult out = composite_paste(in, upsample_weights({}, {}, 4));
  EXPECT_EQ(out.fill_region.at(1, 1), 1);
  EXPECT_EQ(out.fill_region.hole_count(), 1u);
  EXPECT_EQ(out.frame.at(1, 1, 0), 0.0);
}

TEST(CompositePaste, ShapeMismatchThrows) {
  PasteInput in;
  in.target = Frame(8, 8);
  in.hole = HoleMask(8, 9);
  EXPECT_THROW(composite_paste(in, {}), InvalidArgument);
}

TEST(DiffusionFill, ConstantImageStaysConstant) {
  Frame f(20, 20, 0.4);
  HoleMask region(20, 20);
  for (int y = 5; y < 12; ++y)
    for (int x = 3; x < 15; ++x) {
      region.at(y, x) = 1;
      for (int c = 0; c < 3; ++c) f.at(y, x, c) = 0.0;
    }
  const Frame out = diffusion_fill(f, region);
  for (double v : out.data()) EXPECT_NEAR(v, 0.4, 1e-4);
}

TEST(DiffusionFill, EmptyRegionIsIdentity) {
  std::mt19937_64 rng(5);
  const Frame f = testing::random_frame(10, 10, rng);
  EXPECT_TRUE(diffusion_fill(f, HoleMask(10, 10)) == f);
}

TEST(DiffusionFill, WholeFrameIsGray) {
  HoleMask region(9, 9);
  for (auto& v : region.data()) v = 1;
  const Frame out = diffusion_fill(Frame(9, 9, 0.9), region);
  for (double v : out.data()) EXPECT_EQ(v, 0.5);
}

TEST(DiffusionFill, LineOnRampMatchesTridiagonalSolve) {
  // Horizontal ramp 0..1; a 1-pixel line is unknown between x=1 and x=w-2.
  const int h = 9;
  const int w = 33;
  Frame f(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) f.at(y, x, c) = static_cast<double>(x) / (w - 1);
  HoleMask region(h, w);
  const int row = 4;
  for (int x = 1; x < w - 1; ++x) {
    region.at(row, x) = 1;
    for (int c = 0; c < 3; ++c) f.at(row, x, c) = 0.0;
  }
  DiffusionStats stats;
  const Frame out = diffusion_fill(f, region, {}, &stats);
  EXPECT_LT(stats.residual, 1e-4);

  const int n = w - 2;
  std::vector<double> a(n, -1.0), b(n, 4.0), c(n, -1.0), d(n);
  for (int i = 0; i < n; ++i) {
    const int x = i + 1;
    d[i] = f.at(row - 1, x, 0) + f.at(row + 1, x, 0);
  }
  d[0] += f.at(row, 0, 0);
  d[n - 1] += f.at(row, w - 1, 0);
  a[0] = 0.0;
  c[n - 1] = 0.0;
  const auto exact = testing::solve_tridiagonal(a, b, c, d);
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(out.at(row, i + 1, 0), exact[i], 1e-4);
    EXPECT_NEAR(out.at(row, i + 1, 0), static_cast<double>(i + 1) / (w - 1), 1e-4);
  }
}

TEST(DiffusionFill, MaximumPrincipleAndUntouchedOutside) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 25; ++trial) {
    const Frame f = testing::random_frame(24, 24, rng);
    const HoleMask region = testing::random_block_mask(24, 24, 0.3, rng, 3, 10);
    DiffusionStats stats;
    const Frame out = diffusion_fill(f, region, {}, &stats);
    EXPECT_LT(stats.residual, 1e-4);
    for (int c = 0; c < 3; ++c) {
      double lo = INFINITY, hi = -INFINITY;
      for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x) {
          if (region.at(y, x)) continue;
          bool boundary = false;
          for (auto [dy, dx] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
            const int ny = y + dy, nx = x + dx;
            if (ny >= 0 && ny < 24 && nx >= 0 && nx < 24 && region.at(ny, nx)) boundary = true;
          }
          if (!boundary) continue;
          lo = std::min(lo, f.at(y, x, c));
          hi = std::max(hi, f.at(y, x, c));
        }
      for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x) {
          if (!region.at(y, x)) {
            EXPECT_EQ(out.at(y, x, c), f.at(y, x, c));
            continue;
          }
          EXPECT_GE(out.at(y, x, c), lo - 1e-9);
          EXPECT_LE(out.at(y, x, c), hi + 1e-9);
        }
    }
  }
}

TEST(DiffusionFill, ShapeMismatchThrows) {
  EXPECT_THROW(diffusion_fill(Frame(8, 8), HoleMask(8, 9)), InvalidArgument);
}

}  // namespace
}  // namespace cpi
