#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "psr/nn/linalg.hpp"
#include "psr/nn/mlp.hpp"

namespace psr::nn {

/// Working storage on the tape. Column-major, one batch element per column.
using Tensor = Eigen::MatrixXd;

/// Handle to a node on a GradTape.
struct Var {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::size_t id = kNone;
  bool valid() const { return id != kNone; }
};

/// Wengert list for exact reverse-mode differentiation of a scalar loss.
///
/// Nodes are appended in evaluation order, so the list is already a
/// topological order and `backward` walks it once in reverse. Operations are
/// matrix-valued with the batch along columns; the recurrent cells and
/// affine layers are fused into single nodes to keep the tape short.
class GradTape {
 public:
  Var constant(Tensor value);
  Var variable(Tensor value);

  const Tensor& value(Var v) const;
  /// Gradient of the last backward() target w.r.t. `v`; zeros if `v` did not
  /// influence the loss.
  Tensor grad(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scale(Var a, double s);
  Var add_scalar(Var a, double c);
  /// x + b with the column vector b broadcast over the batch.
  Var add_bias(Var x, Var b);
  /// w * x + b (bias broadcast).
  Var linear(Var w, Var x, Var b);
  Var relu(Var x);
  Var concat_rows(Var a, Var b);

  struct GruVars {
    Var w_ih, w_hh, b_ih, b_hh;
  };
  Var gru_cell(const GruVars& p, Var h, Var u);

  /// Sum of squared differences against a constant target (1x1 result).
  Var squared_error(Var pred, const Tensor& target);
  /// Sum of elementwise products (1x1 result).
  Var dot(Var a, Var b);
  /// Sum of 1x1 nodes.
  Var sum(std::span<const Var> scalars);
  /// Product of two 1x1 nodes.
  Var mul(Var a, Var b);
  /// max(0, x) on a 1x1 node; subgradient 0 at the kink.
  Var hinge(Var x);
  /// Largest singular value. The gradient is u v^T built from the power
  /// iteration's singular pair, which is also the subgradient used when the
  /// top singular value is repeated. `warm_start` is read and updated.
  Var spectral_norm(Var m, const PowerIterationOptions& opts = {}, Vec* warm_start = nullptr);

  /// Reverse sweep from a 1x1 node. Throws DimensionError otherwise.
  void backward(Var loss);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::function<void(GradTape&, const Tensor&)> backprop;
  };

  Var push(Tensor value, bool requires_grad,
           std::function<void(GradTape&, const Tensor&)> backprop = {});
  void accumulate(Var v, const Tensor& delta);
  const Node& node(Var v) const;
  void require_scalar(Var v, const char* op) const;

  std::vector<Node> nodes_;
};

struct MlpVars {
  std::vector<Var> weights;
  std::vector<Var> biases;
};

MlpVars bind_mlp(GradTape& tape, const MlpParams& params);
Var mlp_forward(GradTape& tape, const MlpVars& mlp, Var x);

}  // namespace psr::nn
