#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string_view>

namespace psr::nn {

/// Row-major dense matrix of doubles. Shapes are fixed once a parameter set
/// is built; every learnable matrix in the model is stored this way.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

using Rng = std::mt19937_64;

struct PowerIterationOptions {
  int iters = 100;
  /// Stop once the right singular vector moves less than this; sigma is then
  /// accurate to roughly tol^2.
  double tol = 1e-9;
};

struct SpectralResult {
  double sigma = 0.0;
  Vec u;  // left singular vector estimate (rows)
  Vec v;  // right singular vector estimate (cols)
};

/// Largest singular value by power iteration on M^T M. `warm_start`, when it
/// has M.cols() entries and is nonzero, seeds the iteration.
SpectralResult spectral_decomposition(const Eigen::Ref<const Eigen::MatrixXd>& m,
                                      const PowerIterationOptions& opts = {},
                                      const Vec* warm_start = nullptr);

double spectral_norm(const Mat& m, const PowerIterationOptions& opts = {});

/// Uniform U[-1/sqrt(fan_in), 1/sqrt(fan_in)] initialisation.
Mat uniform_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng);
Vec uniform_init_vec(Eigen::Index n, Eigen::Index fan_in, Rng& rng);

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m);

void require_dims(Eigen::Index got, Eigen::Index want, std::string_view what);

}  // namespace psr::nn
