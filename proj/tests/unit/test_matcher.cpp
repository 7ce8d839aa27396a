#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cpi/errors.hpp"
#include "cpi/matcher.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace cpi {
namespace {

FeatureMap random_features(int h, int w, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  FeatureMap f(h, w, c, 4);
  for (double& v : f.data()) v = g(rng);
  return normalize_features(f);
}

MatchInput random_input(std::mt19937_64& rng, int refs, int h, int w, int c) {
  MatchInput in;
  in.target = random_features(h, w, c, rng);
  const VisibilityMap vt = testing::random_binary_visibility(h, w, rng, 0.7);
  for (int r = 0; r < refs; ++r) {
    in.refs.push_back(random_features(h, w, c, rng));
    VisibilityMap vr = testing::random_binary_visibility(h, w, rng, 0.6);
    VisibilityMap joint(h, w, 0.0, true);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) joint.at(y, x) = vt.at(y, x) * vr.at(y, x);
    in.ref_visibility.push_back(vr);
    in.joint_visibility.push_back(joint);
  }
  return in;
}

TEST(GlobalSimilarity, IdenticalFeaturesGiveOne) {
  std::mt19937_64 rng(1);
  const FeatureMap f = random_features(5, 6, 4, rng);
  const Similarity s = global_similarity(f, f, VisibilityMap(5, 6, 1.0, true));
  EXPECT_TRUE(s.usable);
  EXPECT_NEAR(s.theta, 1.0, 1e-12);
}

TEST(GlobalSimilarity, NoVisibilityIsUnusable) {
  std::mt19937_64 rng(2);
  const FeatureMap f = random_features(4, 4, 3, rng);
  const Similarity s = global_similarity(f, f, VisibilityMap(4, 4, 0.0, true));
  EXPECT_FALSE(s.usable);
  EXPECT_EQ(s.theta, 0.0);
}

TEST(GlobalSimilarity, MatchesLoopOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const MatchInput in = random_input(rng, 1, 4, 4, 3);
    const Similarity s = global_similarity(in.target, in.refs[0], in.joint_visibility[0]);
    const auto oracle = testing::oracle_match(in.target, in.refs, in.joint_visibility, in.ref_visibility);
    EXPECT_EQ(s.usable, oracle.usable[0]);
    EXPECT_NEAR(s.theta, oracle.theta[0], 1e-12);
    EXPECT_GE(s.theta, -1.0 - 1e-12);
    EXPECT_LE(s.theta, 1.0 + 1e-12);
  }
}

TEST(GlobalSimilarity, ShapeMismatchThrows) {
  EXPECT_THROW(global_similarity(FeatureMap(2, 2, 3, 4), FeatureMap(2, 3, 3, 4), VisibilityMap(2, 2, 1.0, true)),
               InvalidArgument);
  EXPECT_THROW(global_similarity(FeatureMap(2, 2, 3, 4), FeatureMap(2, 2, 3, 4), VisibilityMap(3, 2, 1.0, true)),
               InvalidArgument);
}

TEST(Saliency, ElementwiseProduct) {
  std::mt19937_64 rng(4);
  const VisibilityMap v = testing::random_binary_visibility(5, 5, rng);
  const Plane s = saliency(0.42, v);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) EXPECT_EQ(s.at(y, x), 0.42 * v.at(y, x));
  VisibilityMap ones(3, 3, 1.0, true);
  const Plane all = saliency(1.0, ones);
  for (double x : all.data()) EXPECT_EQ(x, 1.0);
  ones.at(0, 0) = 0.0;
  EXPECT_EQ(saliency(0.5, ones).at(0, 0), 0.0);
}

TEST(MaskedSoftmax, SingleVisibleReferenceIsOne) {
  const auto w = masked_softmax({Plane(3, 3, 0.7)}, {VisibilityMap(3, 3, 1.0, true)});
  ASSERT_EQ(w.size(), 1u);
  for (double x : w[0].data()) EXPECT_EQ(x, 1.0);
}

TEST(MaskedSoftmax, QuarterThreeQuarters) {
  const auto w = masked_softmax({Plane(1, 1, 0.0), Plane(1, 1, std::log(3.0))},
                                {VisibilityMap(1, 1, 1.0, true), VisibilityMap(1, 1, 1.0, true)});
  EXPECT_NEAR(w[0].at(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(w[1].at(0, 0), 0.75, 1e-15);
}

TEST(MaskedSoftmax, NothingVisibleGivesZeros) {
  std::vector<Plane> s(3, Plane(2, 2, 0.3));
  std::vector<VisibilityMap> v(3, VisibilityMap(2, 2, 0.0, true));
  for (const auto& w : masked_softmax(s, v))
    for (double x : w.data()) EXPECT_EQ(x, 0.0);
}

TEST(MaskedSoftmax, EmptyListIsValid) { EXPECT_TRUE(masked_softmax({}, {}).empty()); }

TEST(MaskedSoftmax, NormalModeCountsInvisibleReferences) {
  // Invisible reference enters with S = 0: exp(0) = 1 in the denominator.
  std::vector<Plane> s = {Plane(1, 1, 0.0), Plane(1, 1, std::log(3.0))};
  std::vector<VisibilityMap> v = {VisibilityMap(1, 1, 0.0, true), VisibilityMap(1, 1, 1.0, true)};
  const auto masked = masked_softmax(s, v, SoftmaxMode::kMasked);
  const auto normal = masked_softmax(s, v, SoftmaxMode::kNormal);
  EXPECT_EQ(masked[0].at(0, 0), 0.0);
  EXPECT_EQ(masked[1].at(0, 0), 1.0);
  EXPECT_NEAR(normal[0].at(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(normal[1].at(0, 0), 0.75, 1e-15);
}

TEST(MaskedSoftmax, ShiftInvariant) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Plane> s;
    std::vector<Plane> shifted;
    std::vector<VisibilityMap> v;
    const double k = 10.0 * u(rng);
    for (int r = 0; r < 4; ++r) {
      s.push_back(testing::random_plane(4, 4, rng, -1.0, 1.0));
      Plane t = s.back();
      for (double& x : t.data()) x += k;
      shifted.push_back(t);
      v.push_back(testing::random_binary_visibility(4, 4, rng));
    }
    const auto a = masked_softmax(s, v);
    const auto b = masked_softmax(shifted, v);
    for (int r = 0; r < 4; ++r)
      for (std::size_t i = 0; i < a[r].data().size(); ++i) EXPECT_NEAR(a[r].data()[i], b[r].data()[i], 1e-12);
  }
}

TEST(Aggregate, SingleFullyVisibleReference) {
  std::mt19937_64 rng(6);
  const FeatureMap f = random_features(3, 4, 5, rng);
  const Aggregation agg = aggregate({f}, {Plane(3, 4, 1.0)}, {VisibilityMap(3, 4, 1.0, true)});
  EXPECT_TRUE(agg.c_out == f);
  for (double x : agg.c_mask.data()) EXPECT_EQ(x, 0.0);
}

TEST(Aggregate, NothingVisibleGivesZeroAndMask) {
  std::mt19937_64 rng(7);
  const FeatureMap f = random_features(2, 2, 3, rng);
  const Aggregation agg = aggregate({f, f}, {Plane(2, 2), Plane(2, 2)},
                                    {VisibilityMap(2, 2, 0.0, true), VisibilityMap(2, 2, 0.0, true)});
  for (double x : agg.c_out.data()) EXPECT_EQ(x, 0.0);
  for (double x : agg.c_mask.data()) EXPECT_EQ(x, 1.0);
}

TEST(Aggregate, ShapeMismatchThrows) {
  EXPECT_THROW(aggregate({FeatureMap(2, 2, 3, 4)}, {Plane(2, 3)}, {VisibilityMap(2, 2, 1.0, true)}),
               InvalidArgument);
  EXPECT_THROW(aggregate({}, {}, {}), InvalidArgument);
}

TEST(Match, MatchesTripleLoopOracle) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> refs_d(0, 5);
  std::uniform_int_distribution<int> dim(1, 8);
  std::uniform_int_distribution<int> ch(1, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const int refs = refs_d(rng);
    const MatchInput in = random_input(rng, refs, dim(rng), dim(rng), ch(rng));
    for (SoftmaxMode mode : {SoftmaxMode::kMasked, SoftmaxMode::kNormal}) {
      const MatchResult got = match(in, mode);
      const auto want = testing::oracle_match(in.target, in.refs, in.joint_visibility, in.ref_visibility,
                                              mode == SoftmaxMode::kMasked);
      for (int r = 0; r < refs; ++r) {
        EXPECT_EQ(got.usable[r], want.usable[r]);
        EXPECT_NEAR(got.theta[r], want.theta[r], 1e-6);
        for (std::size_t i = 0; i < want.c_match[r].data().size(); ++i)
          EXPECT_NEAR(got.c_match[r].data()[i], want.c_match[r].data()[i], 1e-6);
      }
      for (std::size_t i = 0; i < want.c_out.data().size(); ++i)
        EXPECT_NEAR(got.c_out.data()[i], want.c_out.data()[i], 1e-6);
      for (std::size_t i = 0; i < want.c_mask.data().size(); ++i)
        EXPECT_NEAR(got.c_mask.data()[i], want.c_mask.data()[i], 1e-6);
    }
  }
}

TEST(Match, MaskedInvariants) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const int refs = 1 + trial % 5;
    const MatchInput in = random_input(rng, refs, 6, 7, 3);
    const MatchResult res = match(in);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 7; ++x) {
        double sum = 0.0;
        bool any = false;
        for (int r = 0; r < refs; ++r) {
          const double wr = res.c_match[r].at(y, x);
          if (in.ref_visibility[r].at(y, x) == 0.0) EXPECT_EQ(wr, 0.0);
          sum += wr;
          any = any || (res.usable[r] && in.ref_visibility[r].at(y, x) == 1.0);
        }
        const double cm = res.c_mask.at(y, x);
        EXPECT_TRUE(cm == 0.0 || cm == 1.0) << cm;
        EXPECT_EQ(cm, any ? 0.0 : 1.0);
        EXPECT_NEAR(sum, any ? 1.0 : 0.0, 1e-12);
        // Convexity over contributing references.
        if (cm == 0.0) {
          for (int c = 0; c < 3; ++c) {
            double lo = INFINITY, hi = -INFINITY;
            for (int r = 0; r < refs; ++r) {
              if (res.c_match[r].at(y, x) == 0.0) continue;
              lo = std::min(lo, in.refs[r].at(y, x, c));
              hi = std::max(hi, in.refs[r].at(y, x, c));
            }
            EXPECT_GE(res.c_out.at(y, x, c), lo - 1e-12);
            EXPECT_LE(res.c_out.at(y, x, c), hi + 1e-12);
          }
        }
      }
  }
}

TEST(Match, PermutationEquivariantExactly) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const int refs = 2 + trial % 4;
    const MatchInput in = random_input(rng, refs, 5, 5, 4);
    std::vector<int> perm(refs);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    MatchInput p = in;
    for (int r = 0; r < refs; ++r) {
      p.refs[r] = in.refs[perm[r]];
      p.joint_visibility[r] = in.joint_visibility[perm[r]];
      p.ref_visibility[r] = in.ref_visibility[perm[r]];
    }
    const MatchResult a = match(in);
    const MatchResult b = match(p);
    for (int r = 0; r < refs; ++r) {
      EXPECT_EQ(b.theta[r], a.theta[perm[r]]);
      EXPECT_TRUE(b.c_match[r] == a.c_match[perm[r]]);
    }
    EXPECT_TRUE(a.c_out == b.c_out);
    EXPECT_TRUE(a.c_mask == b.c_mask);
  }
}

TEST(Match, RaisingThetaDoesNotLowerWeight) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Plane> s;
    std::vector<VisibilityMap> v;
    std::vector<double> theta;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int r = 0; r < 3; ++r) {
      theta.push_back(u(rng));
      v.push_back(testing::random_binary_visibility(4, 4, rng));
      s.push_back(saliency(theta[r], v[r]));
    }
    const auto before = masked_softmax(s, v);
    s[0] = saliency(theta[0] + 0.3, v[0]);
    const auto after = masked_softmax(s, v);
    for (std::size_t i = 0; i < before[0].data().size(); ++i) EXPECT_GE(after[0].data()[i], before[0].data()[i]);
  }
}

TEST(Match, UnusableReferenceExcluded) {
  std::mt19937_64 rng(12);
  MatchInput in = random_input(rng, 2, 4, 4, 3);
  in.joint_visibility[1] = VisibilityMap(4, 4, 0.0, true);
  in.ref_visibility[1] = VisibilityMap(4, 4, 1.0, true);
  const MatchResult res = match(in);
  EXPECT_FALSE(res.usable[1]);
  EXPECT_EQ(res.theta[1], 0.0);
  for (double x : res.c_match[1].data()) EXPECT_EQ(x, 0.0);
}

TEST(Match, NoReferencesMeansAllNeverVisible) {
  std::mt19937_64 rng(13);
  MatchInput in;
  in.target = random_features(3, 3, 2, rng);
  const MatchResult res = match(in);
  EXPECT_TRUE(res.c_match.empty());
  for (double x : res.c_mask.data()) EXPECT_EQ(x, 1.0);
  for (double x : res.c_out.data()) EXPECT_EQ(x, 0.0);
}

TEST(Match, ModeNames) {
  EXPECT_EQ(softmax_mode_from_string("masked"), SoftmaxMode::kMasked);
  EXPECT_EQ(softmax_mode_from_string("normal"), SoftmaxMode::kNormal);
  EXPECT_THROW(softmax_mode_from_string("soft"), InvalidArgument);
}

}  // namespace
}  // namespace cpi
