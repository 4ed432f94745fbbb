#pragma once

#include "psr/nn/linalg.hpp"

namespace psr::nn {

/// One GRU cell with hidden size n and input size m. Gate blocks are stacked
/// in the order (reset, update, candidate):
///
///   r  = sigma(W_ir u + b_ir + W_hr h + b_hr)
///   z  = sigma(W_iz u + b_iz + W_hz h + b_hz)
///   n  = tanh(W_in u + b_in + r * (W_hn h + b_hn))
///   h' = (1 - z) * n + z * h
struct GruParams {
  Mat w_ih;  // 3n x m
  Mat w_hh;  // 3n x n
  Vec b_ih;  // 3n
  Vec b_hh;  // 3n

  Eigen::Index hidden() const { return w_hh.cols(); }
  Eigen::Index input() const { return w_ih.cols(); }

  void validate() const;

  static GruParams init(Eigen::Index hidden, Eigen::Index input, Rng& rng);
  static GruParams zeros(Eigen::Index hidden, Eigen::Index input);
};

Vec gru_step(const GruParams& params, const Vec& h, const Vec& u);

/// Column-batched step: column j of `h` and `u` is one sample.
Eigen::MatrixXd gru_step_batch(const GruParams& params, const Eigen::MatrixXd& h, const Eigen::MatrixXd& u);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace psr::nn
