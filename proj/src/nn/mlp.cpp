#include "psr/nn/mlp.hpp"

#include <string>

#include "psr/errors.hpp"

namespace psr::nn {

void MlpParams::validate() const {
  if (weights.empty()) throw DimensionError("mlp: no layers");
  if (weights.size() != biases.size()) {
    throw DimensionError("mlp: " + std::to_string(weights.size()) + " weights but " +
                         std::to_string(biases.size()) + " biases");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    require_dims(biases[i].size(), weights[i].rows(), "mlp bias " + std::to_string(i));
    if (i > 0) require_dims(weights[i].cols(), weights[i - 1].rows(), "mlp layer " + std::to_string(i));
  }
}

MlpParams MlpParams::init(Eigen::Index input, const std::vector<Eigen::Index>& hidden,
                          Eigen::Index output, Rng& rng) {
  MlpParams p;
  Eigen::Index prev = input;
  std::vector<Eigen::Index> sizes = hidden;
  sizes.push_back(output);
  for (Eigen::Index n : sizes) {
    p.weights.push_back(uniform_init(n, prev, prev, rng));
    p.biases.push_back(uniform_init_vec(n, prev, rng));
    prev = n;
  }
  return p;
}

MlpParams MlpParams::zeros(Eigen::Index input, const std::vector<Eigen::Index>& hidden,
                           Eigen::Index output) {
  MlpParams p;
  Eigen::Index prev = input;
  std::vector<Eigen::Index> sizes = hidden;
  sizes.push_back(output);
  for (Eigen::Index n : sizes) {
    p.weights.push_back(Mat::Zero(n, prev));
    p.biases.push_back(Vec::Zero(n));
    prev = n;
  }
  return p;
}

Vec mlp_forward(const MlpParams& params, const Vec& x) {
  require_dims(x.size(), params.input_dim(), "mlp_forward input");
  Vec h = x;
  const std::size_t last = params.weights.size() - 1;
  for (std::size_t i = 0; i <= last; ++i) {
    Vec next = params.weights[i] * h + params.biases[i];
    if (i != last) next = next.cwiseMax(0.0);
    h = std::move(next);
  }
  return h;
}

Eigen::MatrixXd mlp_forward_batch(const MlpParams& params, const Eigen::MatrixXd& x) {
  require_dims(x.rows(), params.input_dim(), "mlp_forward_batch input");
  Eigen::MatrixXd h = x;
  const std::size_t last = params.weights.size() - 1;
  for (std::size_t i = 0; i <= last; ++i) {
    Eigen::MatrixXd next = params.weights[i] * h;
    next.colwise() += params.biases[i];
    if (i != last) next = next.cwiseMax(0.0);
    h = std::move(next);
  }
  return h;
}

double lipschitz_upper_bound(const MlpParams& params, const PowerIterationOptions& opts) {
  double bound = 1.0;
  for (const Mat& w : params.weights) bound *= spectral_norm(w, opts);
  return bound;
}

}  // namespace psr::nn
