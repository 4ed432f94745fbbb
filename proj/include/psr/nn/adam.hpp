#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "psr/nn/linalg.hpp"

namespace psr::nn {

/// Non-owning view of one learnable tensor (row-major storage).
struct TensorRef {
  std::string name;
  double* data = nullptr;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  Eigen::Index size() const { return rows * cols; }
  std::span<double> values() const { return {data, static_cast<std::size_t>(size())}; }
};

TensorRef tensor_ref(std::string name, Mat& m);
TensorRef tensor_ref(std::string name, Vec& v);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::vector<Vec> m;
  std::vector<Vec> v;
  std::int64_t step = 0;
};

/// Bias-corrected Adam update applied in place to `params`. Moments are
/// created (zeroed) on first use. `grads[i]` holds the row-major gradient for
/// `params[i]`.
void adam_step(AdamState& state, std::span<const TensorRef> params, std::span<const Vec> grads);

}  // namespace psr::nn
