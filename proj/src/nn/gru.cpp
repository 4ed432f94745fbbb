#include "psr/nn/gru.hpp"

#include <cmath>

#include "psr/errors.hpp"

namespace psr::nn {

void GruParams::validate() const {
  const Eigen::Index n = w_hh.cols();
  require_dims(w_hh.rows(), 3 * n, "gru w_hh rows");
  require_dims(w_ih.rows(), 3 * n, "gru w_ih rows");
  require_dims(b_ih.size(), 3 * n, "gru b_ih");
  require_dims(b_hh.size(), 3 * n, "gru b_hh");
}

GruParams GruParams::init(Eigen::Index hidden, Eigen::Index input, Rng& rng) {
  // PyTorch convention: every GRU tensor uses fan_in = hidden size.
  GruParams p;
  p.w_ih = uniform_init(3 * hidden, input, hidden, rng);
  p.w_hh = uniform_init(3 * hidden, hidden, hidden, rng);
  p.b_ih = uniform_init_vec(3 * hidden, hidden, rng);
  p.b_hh = uniform_init_vec(3 * hidden, hidden, rng);
  return p;
}

GruParams GruParams::zeros(Eigen::Index hidden, Eigen::Index input) {
  GruParams p;
  p.w_ih = Mat::Zero(3 * hidden, input);
  p.w_hh = Mat::Zero(3 * hidden, hidden);
  p.b_ih = Vec::Zero(3 * hidden);
  p.b_hh = Vec::Zero(3 * hidden);
  return p;
}

Vec gru_step(const GruParams& params, const Vec& h, const Vec& u) {
  const Eigen::Index n = params.hidden();
  require_dims(h.size(), n, "gru_step hidden state");
  require_dims(u.size(), params.input(), "gru_step input");
  const Vec gi = params.w_ih * u + params.b_ih;
  const Vec gh = params.w_hh * h + params.b_hh;
  Vec out(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double r = sigmoid(gi[j] + gh[j]);
    const double z = sigmoid(gi[n + j] + gh[n + j]);
    const double c = std::tanh(gi[2 * n + j] + r * gh[2 * n + j]);
    out[j] = (1.0 - z) * c + z * h[j];
  }
  return out;
}

Eigen::MatrixXd gru_step_batch(const GruParams& params, const Eigen::MatrixXd& h, const Eigen::MatrixXd& u) {
  const Eigen::Index n = params.hidden();
  require_dims(h.rows(), n, "gru_step_batch hidden state");
  require_dims(u.rows(), params.input(), "gru_step_batch input");
  require_dims(u.cols(), h.cols(), "gru_step_batch batch");
  Eigen::MatrixXd gi = params.w_ih * u;
  gi.colwise() += params.b_ih;
  Eigen::MatrixXd gh = params.w_hh * h;
  gh.colwise() += params.b_hh;
  Eigen::MatrixXd out(n, h.cols());
  for (Eigen::Index c = 0; c < h.cols(); ++c) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double r = sigmoid(gi(j, c) + gh(j, c));
      const double z = sigmoid(gi(n + j, c) + gh(n + j, c));
      const double cand = std::tanh(gi(2 * n + j, c) + r * gh(2 * n + j, c));
      out(j, c) = (1.0 - z) * cand + z * h(j, c);
    }
  }
  return out;
}

}  // namespace psr::nn
