#include "psr/nn/adam.hpp"

#include <cmath>

#include "psr/errors.hpp"

namespace psr::nn {

TensorRef tensor_ref(std::string name, Mat& m) { return {std::move(name), m.data(), m.rows(), m.cols()}; }

TensorRef tensor_ref(std::string name, Vec& v) { return {std::move(name), v.data(), v.size(), 1}; }

void adam_step(AdamState& state, std::span<const TensorRef> params, std::span<const Vec> grads) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " tensors but " +
                         std::to_string(grads.size()) + " gradients");
  }
  if (state.m.empty()) {
    for (const TensorRef& p : params) {
      state.m.push_back(Vec::Zero(p.size()));
      state.v.push_back(Vec::Zero(p.size()));
    }
  }
  if (state.m.size() != params.size()) throw DimensionError("adam_step: tensor count changed");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_dims(grads[i].size(), params[i].size(), "adam_step gradient for " + params[i].name);
    require_dims(state.m[i].size(), params[i].size(), "adam_step moments for " + params[i].name);
  }

  const AdamOptions& o = state.options;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Eigen::Map<Vec> p(params[i].data, params[i].size());
    Vec& m = state.m[i];
    Vec& v = state.v[i];
    const Vec& g = grads[i];
    m = o.beta1 * m + (1.0 - o.beta1) * g;
    v = o.beta2 * v + (1.0 - o.beta2) * g.cwiseProduct(g);
    p.array() -= o.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + o.eps);
  }
}

}  // namespace psr::nn
