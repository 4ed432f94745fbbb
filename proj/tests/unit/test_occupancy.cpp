#include <cmath>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "psr/errors.hpp"
#include "psr/occupancy/occupancy.hpp"

using namespace psr;
using namespace psr::occupancy;
using psr::testing::for_all;
using psr::testing::Gen;

namespace {

Joints random_joints(Gen& g) {
  const auto nominal = sim::nominal_joints({});
  Joints j{};
  for (std::size_t k = 0; k < 12; ++k) j[k] = nominal[k] + g.uniform(-0.5, 0.5);
  return j;
}

}  // namespace

TEST(Occupancy, PointCountIsFixed) {
  OccupancyConfig cfg;
  EXPECT_EQ(cfg.point_count(), 780);
  for_all(10, 1, [&](Gen& g, int) { EXPECT_EQ(fk_occupancy(random_joints(g), cfg).cols(), 780); });
}

TEST(Occupancy, NominalStanceAboveGround) {
  sim::SurrogateConfig plant;
  const auto pts = fk_occupancy(sim::nominal_joints(plant));
  EXPECT_GE(pts.row(2).minCoeff(), -plant.standing_height() - 1e-9);
  // the feet touch the ground plane
  EXPECT_NEAR(pts.row(2).minCoeff(), -plant.standing_height(), 1e-9);
}

TEST(Occupancy, KneeFlexMovesOnlyThatLeg) {
  OccupancyConfig cfg;
  const auto nominal = sim::nominal_joints({});
  for (int leg = 0; leg < 4; ++leg) {
    Joints j = nominal;
    j[static_cast<std::size_t>(3 * leg + 2)] -= 0.4;
    const auto a = fk_occupancy(nominal, cfg), b = fk_occupancy(j, cfg);
    const int per_leg = 2 * cfg.points_per_link;
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      const Eigen::Index owner = k < cfg.body_points() ? -1 : (k - cfg.body_points()) / per_leg;
      const bool lower_link = owner == leg && (k - cfg.body_points()) % per_leg >= cfg.points_per_link;
      if (lower_link) {
        EXPECT_GT((a.col(k) - b.col(k)).norm(), 0.0);
      } else {
        EXPECT_EQ(a.col(k), b.col(k));
      }
    }
  }
}

TEST(Occupancy, LegLinksKeepTheirLength) {
  sim::BodyGeometry geo;
  for_all(20, 2, [&](Gen& g, int) {
    const int leg = g.integer(0, 3);
    const auto c = leg_chain(geo, leg, g.uniform(-0.5, 0.5), g.uniform(-1, 1), g.uniform(-2, 0));
    EXPECT_NEAR((c.knee - c.hip).norm(), geo.upper_link, 1e-12);
    EXPECT_NEAR((c.foot - c.knee).norm(), geo.lower_link, 1e-12);
  });
}

TEST(Occupancy, BoundingRadiusContainsEverything) {
  OccupancyConfig cfg;
  const double r = bounding_radius(cfg);
  for_all(50, 3, [&](Gen& g, int) {
    Joints j{};
    for (double& v : j) v = g.uniform(-3.14, 3.14);
    EXPECT_LE(fk_occupancy(j, cfg).colwise().norm().maxCoeff(), r + 1e-12);
  });
}

TEST(Occupancy, BatchEqualsSingle) {
  Gen g(4);
  OccupancyModel m{g.mlp(3, 16, 12, 3 * 780)};
  Eigen::MatrixXd joints(12, 5);
  for (int c = 0; c < 5; ++c) {
    const auto j = random_joints(g);
    for (int k = 0; k < 12; ++k) joints(k, c) = j[static_cast<std::size_t>(k)];
  }
  const auto batch = m.evaluate_batch(joints);
  for (int c = 0; c < 5; ++c) {
    Joints j{};
    for (int k = 0; k < 12; ++k) j[static_cast<std::size_t>(k)] = joints(k, c);
    const PointSet p = m.evaluate(j);
    EXPECT_LT((Eigen::Map<const Eigen::VectorXd>(p.data(), p.size()) - batch.col(c)).norm(), 1e-12);
  }
}

TEST(Occupancy, ZeroModelIsNotGoodEnough) {
  OccupancyConfig cfg;
  const auto samples = sample_gait_configurations(200, 5);
  OccupancyModel zero{nn::MlpParams::zeros(12, {16}, 3 * cfg.point_count())};
  EXPECT_GT(mean_point_error(zero, samples, cfg), 0.02);

}

TEST(Occupancy, TrainingApproachesOracle) {
  OccupancyConfig cfg;
  const auto samples = sample_gait_configurations(300, 6);
  OccupancyTrainConfig tc;
  tc.hidden = {32, 64};
  tc.epochs = 60;
  OccupancyTrainReport rep;
  const auto m = train_occupancy(samples, cfg, tc, &rep);
  EXPECT_LT(rep.epoch_loss.back(), rep.epoch_loss.front());
  EXPECT_LT(mean_point_error(m, samples, cfg), 0.02);
}

TEST(Occupancy, SaveLoadRoundTrip) {
  Gen g(7);
  OccupancyModel m{g.mlp(2, 8, 12, 3 * 780)};
  const auto path = std::filesystem::temp_directory_path() / "psr_occ_rt.psrm";
  m.save(path);
  const auto back = OccupancyModel::load(path);
  Joints j = random_joints(g);
  EXPECT_EQ(back.evaluate(j), m.evaluate(j));
  std::filesystem::remove(path);
}

TEST(Occupancy, SamplingIsSeeded) {
  EXPECT_EQ(sample_gait_configurations(20, 3), sample_gait_configurations(20, 3));
  EXPECT_NE(sample_gait_configurations(20, 3), sample_gait_configurations(20, 4));
}
