#include <gtest/gtest.h>

#include <random>
#include <set>

#include "circcal/error.hpp"
#include "circcal/synth.hpp"

namespace circcal {
namespace {

ScenarioTruth SphereScenario(int views, int size) {
  ScenarioTruth t;
  t.rig.intrinsics = BuildIntrinsics(17.6, 1 / 0.0055, 1 / 0.0055, (size - 1) / 2.0, (size - 1) / 2.0);
  t.rig.nominal_distance = 40.0;
  t.grid = InitGrid(Vec3::Zero(), Vec3::Constant(1.0), {16, 16, 16});
  t.image_width = t.image_height = size;
  t.theta_gt = ScenarioTheta(views, 0.0, 0.0, 0.0, 0.0, 1);
  return t;
}

Phantom Sphere(double r) {
  Phantom p;
  p.components.push_back({Vec3::Zero(), Vec3::Constant(r), Mat3::Identity()});
  return p;
}

TEST(Render, SphereSilhouetteIsCenteredDisk) {
  const ScenarioTruth t = SphereScenario(2, 256);
  const auto sil = RenderSilhouettes(Sphere(0.5), t);
  // Radius in pixels: f k r / sqrt(d^2 - r^2) for the tangent cone, ~ f k r / d.
  const double radius = 3200.0 * 0.5 / 40.0;
  const double c = 127.5;
  for (int y = 0; y < 256; ++y) {
    for (int x = 0; x < 256; ++x) {
      const double rho = std::hypot(x - c, y - c);
      const bool on = sil[0][static_cast<std::size_t>(y) * 256 + x] != 0;
      if (rho < radius - 1.0) {
        ASSERT_TRUE(on) << x << "," << y;
      }
      if (rho > radius + 1.0) {
        ASSERT_FALSE(on) << x << "," << y;
      }
    }
  }
}

TEST(Render, OppositeViewsOfSphereMatch) {
  const ScenarioTruth t = SphereScenario(2, 128);
  const auto sil = RenderSilhouettes(Sphere(0.6), t);
  std::size_t differ = 0, area = 0;
  for (std::size_t i = 0; i < sil[0].size(); ++i) {
    differ += sil[0][i] != sil[1][i];
    area += sil[0][i];
  }
  EXPECT_GT(area, 0u);
  // Any disagreement is confined to boundary pixels.
  EXPECT_LT(differ, 0.05 * area);
}

TEST(Render, NoiselessProbabilities) {
  const ScenarioTruth t = SphereScenario(3, 64);
  const auto sil = RenderSilhouettes(Sphere(0.5), t);
  const auto views = RenderViews(Sphere(0.5), t);
  ASSERT_EQ(views.size(), 3u);
  for (std::size_t v = 0; v < 3; ++v) {
    for (std::size_t i = 0; i < sil[v].size(); ++i) {
      ASSERT_EQ(views[v].pf[i], sil[v][i] ? 1 - kProbabilityEpsilon : kProbabilityEpsilon);
      ASSERT_EQ(views[v].pf[i] + views[v].pb[i], 1.0);
    }
  }
}

TEST(Render, FlipNoiseRate) {
  ScenarioTruth t = SphereScenario(2, 128);
  t.noise.flip_rate = 0.05;
  const auto sil = RenderSilhouettes(Sphere(0.5), t);
  const auto views = ViewsFromSilhouettes(sil, t);
  std::size_t flipped = 0, total = 0;
  for (std::size_t v = 0; v < 2; ++v)
    for (std::size_t i = 0; i < sil[v].size(); ++i, ++total) flipped += (views[v].pf[i] > 0.5) != (sil[v][i] != 0);
  EXPECT_NEAR(static_cast<double>(flipped) / total, 0.05, 0.005);
}

TEST(Render, BlurSoftensEdgesOnly) {
  ScenarioTruth t = SphereScenario(2, 128);
  t.noise.blur_radius = 2;
  const auto views = RenderViews(Sphere(0.5), t);
  const ProbabilityImage& v = views[0];
  EXPECT_NEAR(v.pf[v.Index(64, 64)], 1 - kProbabilityEpsilon, 1e-12);
  EXPECT_NEAR(v.pf[v.Index(2, 2)], kProbabilityEpsilon, 1e-12);
  bool intermediate = false;
  for (std::size_t i = 0; i < v.pf.size(); ++i) {
    ASSERT_NEAR(v.pf[i] + v.pb[i], 1.0, 1e-12);
    intermediate |= v.pf[i] > 0.2 && v.pf[i] < 0.8;
  }
  EXPECT_TRUE(intermediate);
}

TEST(Render, InvisiblePhantomIsDegenerate) {
  ScenarioTruth t = SphereScenario(2, 32);
  Phantom far;
  far.components.push_back({Vec3(0.9, 0.9, 0.0), Vec3::Constant(0.05), Mat3::Identity()});
  t.rig.intrinsics = BuildIntrinsics(17.6, 1 / 0.0055, 1 / 0.0055, 15.5, 15.5);
  try {
    RenderViews(far, t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumeric);
  }
}

TEST(Render, ScenarioValidation) {
  ScenarioTruth t = SphereScenario(2, 32);
  t.noise.flip_rate = 0.5;
  EXPECT_THROW(CheckScenario(t), Error);
  t.noise.flip_rate = 0.0;
  t.noise.blur_radius = -1;
  EXPECT_THROW(CheckScenario(t), Error);
  t = SphereScenario(2, 32);
  EXPECT_THROW(CheckPhantom(Sphere(1.5), t.grid), Error);
  EXPECT_NO_THROW(CheckPhantom(FishPhantom(), InitGrid(Vec3::Zero(), Vec3::Constant(1.5), {64, 64, 64})));
}

TEST(Phantom, RayHitsAgreesWithContains) {
  const Phantom fish = FishPhantom();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 2000; ++trial) {
    const Vec3 p(u(rng), u(rng), u(rng));
    const Vec3 origin(p.x(), p.y(), -10.0);
    if (fish.Contains(p)) {
      ASSERT_TRUE(fish.RayHits(origin, Vec3::UnitZ()));
    }
    ASSERT_FALSE(fish.RayHits(Vec3(p.x(), p.y(), 10.0), Vec3::UnitZ()));
  }
}

TEST(Perturb, ZeroRollsIsIdentity) {
  const RigParams t = ScenarioTheta(10, 0.01, 0.02, 0.1, 0.01, 4);
  EXPECT_EQ(Perturb(t, 0, DegToRad(10), 1), t);
}

TEST(Perturb, TenOfThirtySix) {
  const RigParams t = ScenarioTheta(36, 0.01, 0.02, 0.1, 0.01, 4);
  const RigParams p = Perturb(t, 10, DegToRad(10), 5);
  int changed = 0;
  for (std::size_t i = 0; i < t.rolls.size(); ++i) {
    if (p.rolls[i] != t.rolls[i]) {
      ++changed;
      ASSERT_NEAR(p.rolls[i] - t.rolls[i], DegToRad(10), 1e-12);
    }
  }
  EXPECT_EQ(changed, 10);
  EXPECT_EQ(p.yaw, t.yaw);
  EXPECT_EQ(p.pitch, t.pitch);
  EXPECT_EQ(p.trans, t.trans);
  EXPECT_EQ(Perturb(t, 10, DegToRad(10), 5), p);
  EXPECT_NE(Perturb(t, 10, DegToRad(10), 6), p);
}

TEST(Perturb, IndicesDistinctAndBounded) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto idx = PerturbIndices(35, 10, seed);
    ASSERT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), 10u);
    for (auto i : idx) ASSERT_LT(i, 35u);
  }
  EXPECT_THROW(Perturb(ScenarioTheta(5, 0, 0, 0, 0, 1), 5, 0.1, 1), Error);
}

TEST(ScoreRecovery, TableValues) {
  EXPECT_NEAR(AngularDistanceDeg(87.25, 87.29), 0.04, 1e-9);
  EXPECT_NEAR(AngularDistanceDeg(-1.36, 358.76), 0.12, 1e-9);
  RigParams gt, est;
  gt.rolls = {DegToRad(87.25), DegToRad(-1.36)};
  est.rolls = {DegToRad(87.29), DegToRad(358.76)};
  const RecoveryScore s = ScoreRecovery(est, gt);
  EXPECT_NEAR(s.mae_roll_deg, 0.08, 1e-9);
  EXPECT_NEAR(s.max_roll_deg, 0.12, 1e-9);
  EXPECT_EQ(ScoreRecovery(gt, gt).mae_roll_deg, 0.0);
  EXPECT_EQ(ScoreRecovery(gt, gt).max_roll_deg, 0.0);
}

TEST(ScoreRecovery, SymmetricAndPeriodic) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-4, 4);
  for (int trial = 0; trial < 200; ++trial) {
    RigParams a, b;
    a.yaw = u(rng);
    b.yaw = u(rng);
    for (int i = 0; i < 5; ++i) {
      a.rolls.push_back(u(rng));
      b.rolls.push_back(u(rng));
    }
    const RecoveryScore ab = ScoreRecovery(a, b), ba = ScoreRecovery(b, a);
    ASSERT_NEAR(ab.mae_roll_deg, ba.mae_roll_deg, 1e-12);
    ASSERT_NEAR(ab.max_roll_deg, ba.max_roll_deg, 1e-12);
    ASSERT_NEAR(ab.yaw_err_deg, ba.yaw_err_deg, 1e-12);
    RigParams shifted = a;
    shifted.rolls[trial % 5] += 2 * std::numbers::pi;
    ASSERT_NEAR(ScoreRecovery(shifted, b).mae_roll_deg, ab.mae_roll_deg, 1e-9);
  }
  RigParams short_rig;
  short_rig.rolls = {0.1};
  RigParams long_rig;
  long_rig.rolls = {0.1, 0.2};
  EXPECT_THROW(ScoreRecovery(short_rig, long_rig), Error);
}

TEST(ScenarioTheta, EvenSpacingWithJitter) {
  const RigParams t = ScenarioTheta(36, 0.1, -0.2, 0.3, DegToRad(1.0), 11);
  ASSERT_EQ(t.rolls.size(), 35u);
  for (std::size_t i = 0; i < t.rolls.size(); ++i)
    ASSERT_LE(std::abs(RadToDeg(t.rolls[i]) - 10.0 * (i + 1)), 1.0 + 1e-12);
  EXPECT_EQ(t.yaw, 0.1);
  EXPECT_EQ(t.pitch, -0.2);
  EXPECT_EQ(t.trans, 0.3);
  EXPECT_EQ(ScenarioTheta(36, 0.1, -0.2, 0.3, DegToRad(1.0), 11), t);
}

TEST(Photo, AnnotationLabelsAreConsistent) {
  const ScenarioTruth t = SphereScenario(2, 64);
  const auto sil = RenderSilhouettes(Sphere(0.5), t);
  const Rgb fg(0.8, 0.5, 0.2), bg(0.1, 0.2, 0.6);
  const RgbImage photo = RenderPhoto(sil[0], 64, 64, fg, bg, 0.02, 3);
  const GrayImage labels = AnnotationFromSilhouette(sil[0], 64, 64);
  ASSERT_EQ(photo.width, 64);
  std::size_t fg_count = 0, bg_count = 0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const bool on = sil[0][static_cast<std::size_t>(y) * 64 + x] != 0;
      if (labels.At(x, y) == kLabelForeground) {
        ASSERT_TRUE(on);
        ++fg_count;
      } else if (labels.At(x, y) == kLabelBackground) {
        ASSERT_FALSE(on);
        ++bg_count;
      }
    }
  }
  EXPECT_GT(fg_count, 4u);
  EXPECT_GT(bg_count, 4u);
}

}  // namespace
}  // namespace circcal
