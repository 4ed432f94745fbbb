#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "psr/errors.hpp"
#include "psr/nn/adam.hpp"
#include "psr/nn/checkpoint.hpp"
#include "psr/nn/grad_tape.hpp"
#include "psr/nn/gru.hpp"
#include "psr/nn/mlp.hpp"

using namespace psr;
using namespace psr::nn;
using psr::testing::for_all;
using psr::testing::Gen;

namespace {

double svd_norm(const Mat& m) {
  const Eigen::MatrixXd dense = m;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(dense);
  return svd.singularValues()(0);
}

// Plain-loop GRU step, gates in (r, z, n) order.
std::vector<double> scalar_gru(const GruParams& p, const std::vector<double>& h, const std::vector<double>& u) {
  const int n = static_cast<int>(h.size()), m = static_cast<int>(u.size());
  auto row = [&](const Mat& w, const Vec& b, int r, const std::vector<double>& x, int width) {
    double s = b[r];
    for (int j = 0; j < width; ++j) s += w(r, j) * x[static_cast<std::size_t>(j)];
    return s;
  };
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double r = 1 / (1 + std::exp(-(row(p.w_ih, p.b_ih, i, u, m) + row(p.w_hh, p.b_hh, i, h, n))));
    const double z = 1 / (1 + std::exp(-(row(p.w_ih, p.b_ih, n + i, u, m) + row(p.w_hh, p.b_hh, n + i, h, n))));
    const double c = std::tanh(row(p.w_ih, p.b_ih, 2 * n + i, u, m) + r * row(p.w_hh, p.b_hh, 2 * n + i, h, n));
    out[static_cast<std::size_t>(i)] = (1 - z) * c + z * h[static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace

TEST(Mlp, ZeroParametersGiveZero) {
  const auto p = MlpParams::zeros(4, {8, 8}, 3);
  EXPECT_TRUE(mlp_forward(p, Vec::Constant(4, 3.7)).isZero(0));
}

TEST(Mlp, IdentityLayer) {
  MlpParams p;
  p.weights.push_back(Mat::Identity(2, 2));
  p.biases.push_back(Vec::Zero(2));
  const Vec y = mlp_forward(p, Eigen::Vector2d(1, -2));
  EXPECT_DOUBLE_EQ(y[0], 1);
  EXPECT_DOUBLE_EQ(y[1], -2);
}

TEST(Mlp, TwoLayerHandEvaluation) {
  MlpParams p;
  Mat w1(2, 2), w2(2, 2);
  w1 << 1, -2, 0.5, 1;
  w2 << 2, 1, -1, 3;
  p.weights = {w1, w2};
  p.biases = {Vec::Constant(2, 0.25), Eigen::Vector2d(0, -1)};
  // hidden = relu((1 - 2 + 0.25, 0.5 + 1 + 0.25)) = (0, 1.75)
  // out = (1.75, 5.25 - 1)
  const Vec y = mlp_forward(p, Eigen::Vector2d(1, 1));
  EXPECT_DOUBLE_EQ(y[0], 1.75);
  EXPECT_DOUBLE_EQ(y[1], 4.25);
}

TEST(Mlp, BatchMatchesSingle) {
  Gen g(3);
  const auto p = g.mlp(3, 12, 5, 4);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 7);
  const auto batch = mlp_forward_batch(p, x);
  for (int j = 0; j < 7; ++j) EXPECT_LT((batch.col(j) - mlp_forward(p, x.col(j))).norm(), 1e-12);
}

TEST(Mlp, MismatchedLayersRejected) {
  MlpParams p;
  p.weights = {Mat::Zero(3, 2), Mat::Zero(2, 4)};
  p.biases = {Vec::Zero(3), Vec::Zero(2)};
  EXPECT_THROW(p.validate(), DimensionError);
  EXPECT_THROW(mlp_forward(MlpParams::zeros(3, {}, 2), Vec::Zero(4)), DimensionError);
}

TEST(Gru, ZeroParametersHalveState) {
  const auto p = GruParams::zeros(4, 3);
  const Vec h = Eigen::Vector4d(1, -2, 3, 0.5);
  EXPECT_LT((gru_step(p, h, Vec::Constant(3, 7.0)) - 0.5 * h).norm(), 1e-15);
  EXPECT_TRUE(gru_step(p, Vec::Zero(4), Vec::Ones(3)).isZero(0));
}

TEST(Gru, MatchesScalarReference) {
  for_all(20, 11, [](Gen& g, int) {
    GruParams p{g.matrix(9, 2), g.matrix(9, 3), g.vector(9), g.vector(9)};
    const Vec h = g.vector(3), u = g.vector(2);
    const auto ref = scalar_gru(p, {h[0], h[1], h[2]}, {u[0], u[1]});
    const Vec out = gru_step(p, h, u);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(out[i], ref[static_cast<std::size_t>(i)], 1e-14);
  });
}

TEST(Gru, BatchMatchesSingle) {
  Gen g(5);
  nn::Rng rng(1);
  const auto p = GruParams::init(6, 3, rng);
  Eigen::MatrixXd h = Eigen::MatrixXd::Random(6, 4), u = Eigen::MatrixXd::Random(3, 4);
  const auto out = gru_step_batch(p, h, u);
  for (int j = 0; j < 4; ++j) EXPECT_LT((out.col(j) - gru_step(p, h.col(j), u.col(j))).norm(), 1e-13);
}

TEST(SpectralNorm, TrivialCases) {
  EXPECT_NEAR(spectral_norm(Mat::Identity(5, 5)), 1.0, 1e-12);
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 3;
  d(1, 1) = 1;
  EXPECT_NEAR(spectral_norm(d), 3.0, 1e-9);
  EXPECT_EQ(spectral_norm(Mat::Zero(3, 2)), 0.0);
}

TEST(SpectralNorm, MatchesSvd) {
  for_all(50, 17, [](Gen& g, int) {
    const Mat m = g.matrix(4, 3, 2.0);
    const double want = svd_norm(m);
    EXPECT_LT(std::abs(spectral_norm(m, {1000, 1e-14}) - want) / want, 1e-8);
  });
}

TEST(Lipschitz, SingleLayerAndProduct) {
  Gen g(2);
  MlpParams one;
  one.weights = {g.matrix(4, 3)};
  one.biases = {g.vector(4)};
  EXPECT_NEAR(lipschitz_upper_bound(one, {1000, 1e-14}), svd_norm(one.weights[0]), 1e-9);

  MlpParams two;
  two.weights = {2.0 * Mat::Identity(3, 3), 0.5 * Mat::Identity(3, 3)};
  two.biases = {Vec::Zero(3), Vec::Zero(3)};
  EXPECT_NEAR(lipschitz_upper_bound(two), 1.0, 1e-12);
}

TEST(Lipschitz, BoundsEmpiricalRatio) {
  for_all(10, 23, [](Gen& g, int) {
    const auto p = g.mlp(3, 16);
    const double bound = lipschitz_upper_bound(p, {1000, 1e-14});
    double worst = 0;
    for (int k = 0; k < 2000; ++k) {
      const Vec x = g.vector(p.input_dim(), 3.0), y = g.vector(p.input_dim(), 3.0);
      const double d = (x - y).norm();
      if (d < 1e-12) continue;
      worst = std::max(worst, (mlp_forward(p, x) - mlp_forward(p, y)).norm() / d);
    }
    EXPECT_LE(worst, bound + 1e-9);
  });
}

TEST(GradTape, QuadraticGradient) {
  GradTape tape;
  const Var x = tape.variable(Eigen::Vector2d(1, 2));
  const Var loss = tape.dot(x, x);
  tape.backward(loss);
  EXPECT_DOUBLE_EQ(tape.value(loss)(0, 0), 5.0);
  EXPECT_DOUBLE_EQ(tape.grad(x)(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(tape.grad(x)(1, 0), 4.0);
}

TEST(GradTape, SpectralNormGradientIsTopSingularPair) {
  GradTape tape;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 2);
  w(0, 0) = 3;
  w(1, 1) = 1;
  const Var W = tape.variable(w);
  const Var s = tape.spectral_norm(W, {1000, 1e-14});
  tape.backward(s);
  Eigen::MatrixXd want = Eigen::MatrixXd::Zero(2, 2);
  want(0, 0) = 1;
  EXPECT_LT((tape.grad(W) - want).norm(), 1e-8);

  // finite differences
  const double h = 1e-6;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      Mat a = w, b = w;
      a(i, j) += h;
      b(i, j) -= h;
      EXPECT_NEAR((spectral_norm(a, {1000, 1e-14}) - spectral_norm(b, {1000, 1e-14})) / (2 * h), want(i, j), 1e-6);
    }
  }
}

TEST(GradTape, MlpGradientMatchesFiniteDifferences) {
  Gen g(9);
  auto p = g.mlp(3, 6, 4, 2);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 3);
  const Eigen::MatrixXd target = Eigen::MatrixXd::Random(2, 3);
  auto loss_of = [&](const MlpParams& q) { return (mlp_forward_batch(q, x) - target).squaredNorm(); };

  GradTape tape;
  const auto vars = bind_mlp(tape, p);
  const Var out = mlp_forward(tape, vars, tape.constant(x));
  const Var loss = tape.squared_error(out, target);
  tape.backward(loss);
  EXPECT_NEAR(tape.value(loss)(0, 0), loss_of(p), 1e-12);

  const double h = 1e-6;
  for (std::size_t l = 0; l < p.layers(); ++l) {
    const Eigen::MatrixXd gw = tape.grad(vars.weights[l]);
    for (Eigen::Index i = 0; i < p.weights[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < p.weights[l].cols(); ++j) {
        auto a = p, b = p;
        a.weights[l](i, j) += h;
        b.weights[l](i, j) -= h;
        const double fd = (loss_of(a) - loss_of(b)) / (2 * h);
        EXPECT_NEAR(gw(i, j), fd, 1e-6 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST(GradTape, GruCellMatchesFiniteDifferences) {
  Gen g(4);
  GruParams p{g.matrix(6, 2), g.matrix(6, 2), g.vector(6), g.vector(6)};
  const Eigen::MatrixXd h0 = Eigen::MatrixXd::Random(2, 2), u = Eigen::MatrixXd::Random(2, 2);
  const Eigen::MatrixXd target = Eigen::MatrixXd::Random(2, 2);
  auto loss_of = [&](const GruParams& q) {
    const auto h1 = gru_step_batch(q, h0, u);
    return (gru_step_batch(q, h1, u) - target).squaredNorm();
  };

  GradTape tape;
  GradTape::GruVars v{tape.variable(p.w_ih), tape.variable(p.w_hh), tape.variable(p.b_ih), tape.variable(p.b_hh)};
  const Var U = tape.constant(u);
  const Var h1 = tape.gru_cell(v, tape.constant(h0), U);
  const Var loss = tape.squared_error(tape.gru_cell(v, h1, U), target);
  tape.backward(loss);

  const double h = 1e-6;
  const Eigen::MatrixXd gw = tape.grad(v.w_hh);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 2; ++j) {
      auto a = p, b = p;
      a.w_hh(i, j) += h;
      b.w_hh(i, j) -= h;
      EXPECT_NEAR(gw(i, j), (loss_of(a) - loss_of(b)) / (2 * h), 1e-7);
    }
  }
  const Eigen::MatrixXd gb = tape.grad(v.b_ih);
  for (int i = 0; i < 6; ++i) {
    auto a = p, b = p;
    a.b_ih[i] += h;
    b.b_ih[i] -= h;
    EXPECT_NEAR(gb(i, 0), (loss_of(a) - loss_of(b)) / (2 * h), 1e-7);
  }
}

TEST(GradTape, NonScalarBackwardRejected) {
  GradTape tape;
  const Var x = tape.variable(Eigen::Vector2d(1, 2));
  EXPECT_THROW(tape.backward(x), DimensionError);
}

TEST(Adam, ZeroGradientLeavesParametersAlone) {
  Vec w = Eigen::Vector3d(1, 2, 3);
  const Vec before = w;
  std::vector<TensorRef> refs{tensor_ref("w", w)};
  std::vector<Vec> grads{Vec::Zero(3)};
  AdamState st;
  adam_step(st, refs, grads);
  EXPECT_EQ(w, before);
  EXPECT_TRUE(st.m[0].isZero(0));
  EXPECT_TRUE(st.v[0].isZero(0));
}

TEST(Adam, FirstStepIsSignTimesLearningRate) {
  Vec w = Eigen::Vector2d(0.5, -0.5);
  std::vector<TensorRef> refs{tensor_ref("w", w)};
  std::vector<Vec> grads{Eigen::Vector2d(3.0, -0.02)};
  AdamState st;
  st.options.lr = 0.01;
  adam_step(st, refs, grads);
  EXPECT_NEAR(w[0], 0.5 - 0.01, 1e-8);
  EXPECT_NEAR(w[1], -0.5 + 0.01, 1e-6);
}

TEST(Adam, MatchesScalarTrace) {
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double w = 1.0, m = 0, v = 0;
  Vec wv = Vec::Constant(1, 1.0);
  std::vector<TensorRef> refs{tensor_ref("w", wv)};
  AdamState st;
  st.options.lr = lr;
  for (int t = 1; t <= 2; ++t) {
    const double g = 2 * w;  // d/dw w^2
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    w -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
    std::vector<Vec> grads{Vec::Constant(1, 2 * wv[0])};
    adam_step(st, refs, grads);
    EXPECT_NEAR(wv[0], w, 1e-15);
  }
}

TEST(Checkpoint, RoundTripAndErrors) {
  const auto dir = std::filesystem::temp_directory_path() / "psr_ckpt_test";
  std::filesystem::create_directories(dir);
  Gen g(1);
  const Mat a = g.matrix(3, 4);
  const Vec b = g.vector(5);
  write_checkpoint(dir / "x.psrm", {NamedTensor::from("a", a), NamedTensor::from("b", b)});
  const auto back = read_checkpoint(dir / "x.psrm");
  EXPECT_EQ(find_tensor(back, "a").to_mat(), a);
  EXPECT_EQ(find_tensor(back, "b").to_vec(), b);
  EXPECT_FALSE(has_tensor(back, "c"));

  EXPECT_THROW(read_checkpoint(dir / "missing.psrm"), IoError);
  {
    std::ofstream os(dir / "bad.psrm", std::ios::binary);
    os << "NOPE1234";
  }
  EXPECT_THROW(read_checkpoint(dir / "bad.psrm"), FormatError);
  std::filesystem::remove_all(dir);
}
