#pragma once

#include <vector>

#include "psr/nn/linalg.hpp"

namespace psr::nn {

/// ReLU multilayer perceptron. `weights[i]` maps layer i to layer i+1 and
/// every layer, including the output, carries a bias. ReLU is applied after
/// every layer except the last.
struct MlpParams {
  std::vector<Mat> weights;
  std::vector<Vec> biases;

  Eigen::Index input_dim() const { return weights.empty() ? 0 : weights.front().cols(); }
  Eigen::Index output_dim() const { return weights.empty() ? 0 : weights.back().rows(); }
  std::size_t layers() const { return weights.size(); }

  /// Throws DimensionError when adjacent layers disagree.
  void validate() const;

  static MlpParams init(Eigen::Index input, const std::vector<Eigen::Index>& hidden,
                        Eigen::Index output, Rng& rng);
  static MlpParams zeros(Eigen::Index input, const std::vector<Eigen::Index>& hidden,
                         Eigen::Index output);
};

Vec mlp_forward(const MlpParams& params, const Vec& x);

/// Column-batched forward pass; each column of `x` is one input.
Eigen::MatrixXd mlp_forward_batch(const MlpParams& params, const Eigen::MatrixXd& x);

/// Product of the spectral norms of all weight matrices; a global Lipschitz
/// bound for the network in the Euclidean norm.
double lipschitz_upper_bound(const MlpParams& params, const PowerIterationOptions& opts = {});

}  // namespace psr::nn
