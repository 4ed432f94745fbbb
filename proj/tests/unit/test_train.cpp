#include <cmath>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "psr/errors.hpp"
#include "psr/model/cv_baseline.hpp"
#include "psr/train/evaluate.hpp"
#include "psr/train/trainer.hpp"

using namespace psr;
using namespace psr::train;
using data::WindowSample;
using model::Command;
using model::ModelParams;
using psr::testing::Gen;

namespace {

WindowSample random_window(Gen& g, int H, int T) {
  WindowSample w;
  for (int k = 0; k <= H; ++k) w.y.push_back(g.vector(14, 0.5));
  w.u = g.commands(H + T + 1);
  w.targets = g.matrix(T, 18, 0.5);
  return w;
}

// Observer and predictor composed by hand from the layer primitives.
double scripted_loss(const ModelParams& m, const WindowSample& w) {
  const int H = w.history(), T = w.horizon();
  nn::Vec x = nn::Vec::Zero(m.latent());
  for (int k = 0; k < H; ++k) {
    nn::Vec in(x.size() + 3);
    in << x, w.u[static_cast<std::size_t>(k)];
    x = m.observer.A * x + nn::mlp_forward(m.observer.g, in) +
        m.observer.K * (w.y[static_cast<std::size_t>(k)] - m.observer.C_y * x);
  }
  double sum = 0;
  for (int t = 0; t < T; ++t) {
    x = nn::gru_step(m.predictor.f, x, w.u[static_cast<std::size_t>(H + t)]);
    nn::Vec z(18);
    z << m.predictor.C_u * x, m.observer.C_y * x;
    sum += (z - w.targets.row(t).transpose()).squaredNorm();
  }
  return sum / (T * 18.0);
}

double total_loss(const ModelParams& m, std::span<const WindowSample> ws, double alpha, double eps) {
  return prediction_loss(m, ws) + alpha * stability_loss(m.observer, eps, {20000, 1e-15});
}

std::vector<const WindowSample*> pointers(const std::vector<WindowSample>& ws) {
  std::vector<const WindowSample*> p;
  for (const auto& w : ws) p.push_back(&w);
  return p;
}

ModelParams zero_model(Eigen::Index n) {
  nn::Rng rng(1);
  auto m = ModelParams::init({n, {n}}, rng);
  for (auto& ref : m.tensors()) {
    for (double& v : ref.values()) v = 0;
  }
  return m;
}

}  // namespace

TEST(PredictionLoss, PerfectPredictionIsZero) {
  Gen g(1);
  nn::Rng rng(1);
  const auto m = ModelParams::init({8, {8}}, rng);
  std::vector<WindowSample> ws{random_window(g, 4, 6), random_window(g, 4, 6)};
  const auto preds = predict_windows(m, ws);
  for (std::size_t i = 0; i < ws.size(); ++i) ws[i].targets = preds[i];
  EXPECT_LT(prediction_loss(m, ws), 1e-28);
  EXPECT_LT(prediction_loss(m, ws[0]), 1e-28);
}

TEST(PredictionLoss, MeanOverDimensions) {
  const auto m = zero_model(6);
  Gen g(2);
  auto w = random_window(g, 3, 5);
  w.targets.setZero();
  w.targets.col(7).setOnes();  // unit norm at every step
  EXPECT_NEAR(prediction_loss(m, w), 1.0 / 18.0, 1e-15);
}

TEST(PredictionLoss, MatchesScriptedOracleAndBatchedRoute) {
  Gen g(3);
  nn::Rng rng(3);
  const auto m = ModelParams::init({6, {6, 6}}, rng);
  std::vector<WindowSample> ws;
  for (int i = 0; i < 5; ++i) ws.push_back(random_window(g, 4, 7));
  double mean = 0;
  for (const auto& w : ws) {
    EXPECT_NEAR(prediction_loss(m, w), scripted_loss(m, w), 1e-12);
    mean += scripted_loss(m, w) / 5;
  }
  EXPECT_NEAR(prediction_loss(m, ws), mean, 1e-12);
  const auto p = pointers(ws);
  EXPECT_NEAR(loss_and_gradient(m, p, 0.0, 1e-4, false).terms.prediction, mean, 1e-12);
}

TEST(StabilityLoss, Hinge) {
  auto m = zero_model(4);
  m.observer.A = 0.5 * nn::Mat::Identity(4, 4);
  EXPECT_EQ(stability_loss(m.observer, 1e-4), 0.0);
  m.observer.A = 1.2 * nn::Mat::Identity(4, 4);
  EXPECT_NEAR(stability_loss(m.observer, 1e-4), 0.2001, 1e-9);
}

TEST(LossGradient, MatchesFiniteDifferences) {
  Gen g(4);
  nn::Rng rng(4);
  auto m = ModelParams::init({8, {8, 8}}, rng);
  std::vector<WindowSample> ws{random_window(g, 5, 10), random_window(g, 5, 10)};
  const double alpha = 0.1, eps = 1e-4;
  ASSERT_GT(stability_loss(m.observer, eps), 0.0);
  const auto p = pointers(ws);
  const auto lg = loss_and_gradient(m, p, alpha, eps, true, nullptr, {5000, 1e-13});
  EXPECT_NEAR(lg.terms.total, total_loss(m, ws, alpha, eps), 1e-9);

  auto refs = m.tensors();
  const double h = 1e-5;
  double worst = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    for (Eigen::Index j = 0; j < refs[i].size(); j += 7) {
      double& v = refs[i].data[j];
      const double keep = v;
      v = keep + h;
      const double up = total_loss(m, ws, alpha, eps);
      v = keep - h;
      const double down = total_loss(m, ws, alpha, eps);
      v = keep;
      const double fd = (up - down) / (2 * h);
      const double an = lg.grads[i][j];
      const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
      worst = std::max(worst, rel);
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(LossGradient, StabilityTermTouchesOnlyObserverWeights) {
  Gen g(5);
  nn::Rng rng(5);
  const auto m = ModelParams::init({6, {6}}, rng);
  std::vector<WindowSample> ws{random_window(g, 3, 4)};
  ASSERT_GT(stability_loss(m.observer, 1e-4), 0.0);
  const auto p = pointers(ws);
  const auto with = loss_and_gradient(m, p, 1.0, 1e-4, true);
  const auto without = loss_and_gradient(m, p, 1.0, 1e-4, false);
  auto refs = const_cast<ModelParams&>(m).tensors();
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const double diff = (with.grads[i] - without.grads[i]).norm();
    const std::string& name = refs[i].name;
    const bool weight = name.find(".W") != std::string::npos || name == "observer.A" || name == "observer.K" ||
                        name == "observer.C_y";
    if (weight) {
      EXPECT_GT(diff, 0.0) << name;
    } else {
      EXPECT_EQ(diff, 0.0) << name;
    }
  }
}

TEST(Training, RegularizerDrivesContraction) {
  data::DatasetConfig dc;
  dc.minutes = 2;
  dc.H = 5;
  dc.T = 10;
  dc.stride = 20;
  const auto d = data::generate_dataset(dc, {}, 1);
  TrainConfig tc;
  tc.dims = {8, {8}};
  tc.epochs = 4;
  tc.alpha = 10.0;
  tc.lr = 1e-2;
  const auto r = train::train(d.train, d.test, tc);
  EXPECT_GT(r.report.epochs.front().rho, 1.0);
  EXPECT_LE(r.report.epochs.back().rho, 1.0 - tc.eps);
  EXPECT_TRUE(r.report.contractive);
  for (const auto& e : r.report.epochs) EXPECT_TRUE(std::isfinite(e.train_loss));

  const auto again = train::train(d.train, d.test, tc);
  ASSERT_EQ(again.report.epochs.size(), r.report.epochs.size());
  for (std::size_t i = 0; i < r.report.epochs.size(); ++i) {
    EXPECT_EQ(again.report.epochs[i].train_loss, r.report.epochs[i].train_loss);
    EXPECT_EQ(again.report.epochs[i].rho, r.report.epochs[i].rho);
  }
}

TEST(Training, InvalidConfigRejected) {
  TrainConfig tc;
  tc.batch_size = 0;
  EXPECT_THROW(tc.validate(), ConfigError);
}

TEST(Evaluation, PerfectPredictionHasZeroError) {
  Gen g(6);
  const nn::Mat t = g.matrix(12, 18);
  for (double e : position_errors(t, t)) EXPECT_EQ(e, 0.0);
}

TEST(Evaluation, ConstantVelocityTruthGivesZeroBaselineError) {
  const int H = 3, T = 40;
  const double dt = 0.02;
  WindowSample w;
  w.y.assign(H + 1, nn::Vec::Zero(14));
  w.u.assign(H + T + 1, Command(0.3, 0.1, 0.4));
  w.targets = nn::Mat::Zero(T, 18);
  PlanarPose q;
  for (int t = 0; t < T; ++t) {
    const Eigen::Vector2d d = yaw_rotation(q.yaw) * Eigen::Vector2d(0.3, 0.1) * dt;
    q = {q.x + d.x(), q.y + d.y(), q.yaw + 0.4 * dt};
    w.targets(t, 0) = q.x;
    w.targets(t, 1) = q.y;
  }
  for (double e : position_errors(nn::Mat(cv_positions(w, dt)), w.targets)) EXPECT_LT(e, 1e-12);
}

TEST(Evaluation, ObserverCurveShape) {
  Gen g(7);
  nn::Rng rng(7);
  auto m = ModelParams::init({6, {6}}, rng);
  std::vector<WindowSample> ws{random_window(g, 8, 2), random_window(g, 8, 2)};
  const auto c = observer_convergence(m.observer, ws, 10, 10.0, 1);
  EXPECT_EQ(c.median.size(), 9u);
  EXPECT_EQ(c.mean.size(), 9u);
  EXPECT_DOUBLE_EQ(c.final_ratio(), c.median.back() / c.median.front());
}
