#include "psr/nn/grad_tape.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "psr/errors.hpp"

namespace psr::nn {

Var GradTape::push(Tensor value, bool requires_grad,
                   std::function<void(GradTape&, const Tensor&)> backprop) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const GradTape::Node& GradTape::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) throw DomainError("grad tape: invalid variable handle");
  return nodes_[v.id];
}

void GradTape::accumulate(Var v, const Tensor& delta) {
  Node& n = nodes_[v.id];
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = delta;
    n.has_grad = true;
  } else {
    n.grad += delta;
  }
}

void GradTape::require_scalar(Var v, const char* op) const {
  const Tensor& t = node(v).value;
  if (t.rows() != 1 || t.cols() != 1) {
    throw DimensionError(std::string(op) + ": expected a scalar node, got " +
                         std::to_string(t.rows()) + "x" + std::to_string(t.cols()));
  }
}

Var GradTape::constant(Tensor value) { return push(std::move(value), false); }

Var GradTape::variable(Tensor value) { return push(std::move(value), true); }

const Tensor& GradTape::value(Var v) const { return node(v).value; }

Tensor GradTape::grad(Var v) const {
  const Node& n = node(v);
  if (n.has_grad) return n.grad;
  return Tensor::Zero(n.value.rows(), n.value.cols());
}

bool GradTape::requires_grad(Var v) const { return node(v).requires_grad; }

Var GradTape::matmul(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require_dims(bv.rows(), av.cols(), "matmul inner dimension");
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(av * bv, rg, [a, b](GradTape& t, const Tensor& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * t.value(b).transpose());
    if (t.requires_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
  });
}

Var GradTape::add(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require_dims(bv.rows(), av.rows(), "add rows");
  require_dims(bv.cols(), av.cols(), "add cols");
  return push(av + bv, requires_grad(a) || requires_grad(b), [a, b](GradTape& t, const Tensor& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var GradTape::sub(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require_dims(bv.rows(), av.rows(), "sub rows");
  require_dims(bv.cols(), av.cols(), "sub cols");
  return push(av - bv, requires_grad(a) || requires_grad(b), [a, b](GradTape& t, const Tensor& g) {
    t.accumulate(a, g);
    if (t.requires_grad(b)) t.accumulate(b, -g);
  });
}

Var GradTape::scale(Var a, double s) {
  return push(value(a) * s, requires_grad(a),
              [a, s](GradTape& t, const Tensor& g) { t.accumulate(a, g * s); });
}

Var GradTape::add_scalar(Var a, double c) {
  return push(value(a).array() + c, requires_grad(a),
              [a](GradTape& t, const Tensor& g) { t.accumulate(a, g); });
}

Var GradTape::add_bias(Var x, Var b) {
  const Tensor& xv = value(x);
  const Tensor& bv = value(b);
  require_dims(bv.rows(), xv.rows(), "add_bias rows");
  require_dims(bv.cols(), 1, "add_bias bias columns");
  Tensor out = xv;
  out.colwise() += bv.col(0);
  return push(std::move(out), requires_grad(x) || requires_grad(b), [x, b](GradTape& t, const Tensor& g) {
    t.accumulate(x, g);
    if (t.requires_grad(b)) t.accumulate(b, g.rowwise().sum());
  });
}

Var GradTape::linear(Var w, Var x, Var b) {
  const Tensor& wv = value(w);
  const Tensor& xv = value(x);
  const Tensor& bv = value(b);
  require_dims(xv.rows(), wv.cols(), "linear input");
  require_dims(bv.rows(), wv.rows(), "linear bias");
  Tensor out = wv * xv;
  out.colwise() += bv.col(0);
  const bool rg = requires_grad(w) || requires_grad(x) || requires_grad(b);
  return push(std::move(out), rg, [w, x, b](GradTape& t, const Tensor& g) {
    if (t.requires_grad(w)) t.accumulate(w, g * t.value(x).transpose());
    if (t.requires_grad(b)) t.accumulate(b, g.rowwise().sum());
    if (t.requires_grad(x)) t.accumulate(x, t.value(w).transpose() * g);
  });
}

Var GradTape::relu(Var x) {
  return push(value(x).cwiseMax(0.0), requires_grad(x), [x](GradTape& t, const Tensor& g) {
    const Tensor& xv = t.value(x);
    t.accumulate(x, (xv.array() > 0.0).select(g, 0.0));
  });
}

Var GradTape::concat_rows(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require_dims(bv.cols(), av.cols(), "concat_rows cols");
  Tensor out(av.rows() + bv.rows(), av.cols());
  out.topRows(av.rows()) = av;
  out.bottomRows(bv.rows()) = bv;
  const Eigen::Index ra = av.rows();
  const Eigen::Index rb = bv.rows();
  return push(std::move(out), requires_grad(a) || requires_grad(b), [a, b, ra, rb](GradTape& t, const Tensor& g) {
    if (t.requires_grad(a)) t.accumulate(a, g.topRows(ra));
    if (t.requires_grad(b)) t.accumulate(b, g.bottomRows(rb));
  });
}

Var GradTape::gru_cell(const GruVars& p, Var h, Var u) {
  const Tensor& hv = value(h);
  const Tensor& uv = value(u);
  const Tensor& w_ih = value(p.w_ih);
  const Tensor& w_hh = value(p.w_hh);
  const Eigen::Index n = w_hh.cols();
  require_dims(w_hh.rows(), 3 * n, "gru_cell w_hh");
  require_dims(hv.rows(), n, "gru_cell hidden");
  require_dims(uv.rows(), w_ih.cols(), "gru_cell input");
  require_dims(uv.cols(), hv.cols(), "gru_cell batch");

  Tensor gi = w_ih * uv;
  gi.colwise() += value(p.b_ih).col(0);
  Tensor gh = w_hh * hv;
  gh.colwise() += value(p.b_hh).col(0);

  Tensor r = (1.0 + (-(gi.topRows(n) + gh.topRows(n)).array()).exp()).inverse().matrix();
  Tensor z = (1.0 + (-(gi.middleRows(n, n) + gh.middleRows(n, n)).array()).exp()).inverse().matrix();
  Tensor ghn = gh.bottomRows(n);
  Tensor c = (gi.bottomRows(n).array() + r.array() * ghn.array()).tanh().matrix();
  Tensor out = ((1.0 - z.array()) * c.array() + z.array() * hv.array()).matrix();

  const bool rg = requires_grad(h) || requires_grad(u) || requires_grad(p.w_ih) ||
                  requires_grad(p.w_hh) || requires_grad(p.b_ih) || requires_grad(p.b_hh);
  return push(std::move(out), rg,
              [p, h, u, n, r = std::move(r), z = std::move(z), c = std::move(c),
               ghn = std::move(ghn)](GradTape& t, const Tensor& g) {
                const Tensor& hv = t.value(h);
                const Tensor dc = g.array() * (1.0 - z.array());
                const Tensor dz = g.array() * (hv.array() - c.array());
                const Tensor dac = dc.array() * (1.0 - c.array().square());
                const Tensor dr = dac.array() * ghn.array();
                const Tensor daz = dz.array() * z.array() * (1.0 - z.array());
                const Tensor dar = dr.array() * r.array() * (1.0 - r.array());

                Tensor dgi(3 * n, g.cols());
                dgi.topRows(n) = dar;
                dgi.middleRows(n, n) = daz;
                dgi.bottomRows(n) = dac;
                Tensor dgh(3 * n, g.cols());
                dgh.topRows(n) = dar;
                dgh.middleRows(n, n) = daz;
                dgh.bottomRows(n) = dac.array() * r.array();

                if (t.requires_grad(p.w_ih)) t.accumulate(p.w_ih, dgi * t.value(u).transpose());
                if (t.requires_grad(p.b_ih)) t.accumulate(p.b_ih, dgi.rowwise().sum());
                if (t.requires_grad(u)) t.accumulate(u, t.value(p.w_ih).transpose() * dgi);
                if (t.requires_grad(p.w_hh)) t.accumulate(p.w_hh, dgh * hv.transpose());
                if (t.requires_grad(p.b_hh)) t.accumulate(p.b_hh, dgh.rowwise().sum());
                if (t.requires_grad(h)) {
                  Tensor dh = t.value(p.w_hh).transpose() * dgh;
                  dh.array() += g.array() * z.array();
                  t.accumulate(h, dh);
                }
              });
}

Var GradTape::squared_error(Var pred, const Tensor& target) {
  const Tensor& pv = value(pred);
  require_dims(target.rows(), pv.rows(), "squared_error rows");
  require_dims(target.cols(), pv.cols(), "squared_error cols");
  Tensor diff = pv - target;
  Tensor out(1, 1);
  out(0, 0) = diff.squaredNorm();
  return push(std::move(out), requires_grad(pred),
              [pred, diff = std::move(diff)](GradTape& t, const Tensor& g) {
                t.accumulate(pred, diff * (2.0 * g(0, 0)));
              });
}

Var GradTape::dot(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require_dims(bv.rows(), av.rows(), "dot rows");
  require_dims(bv.cols(), av.cols(), "dot cols");
  Tensor out(1, 1);
  out(0, 0) = av.cwiseProduct(bv).sum();
  return push(std::move(out), requires_grad(a) || requires_grad(b), [a, b](GradTape& t, const Tensor& g) {
    const double s = g(0, 0);
    if (t.requires_grad(a)) t.accumulate(a, t.value(b) * s);
    if (t.requires_grad(b)) t.accumulate(b, t.value(a) * s);
  });
}

Var GradTape::sum(std::span<const Var> scalars) {
  Tensor out = Tensor::Zero(1, 1);
  bool rg = false;
  for (Var v : scalars) {
    require_scalar(v, "sum");
    out(0, 0) += value(v)(0, 0);
    rg = rg || requires_grad(v);
  }
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  return push(std::move(out), rg, [inputs = std::move(inputs)](GradTape& t, const Tensor& g) {
    for (Var v : inputs) t.accumulate(v, g);
  });
}

Var GradTape::mul(Var a, Var b) {
  require_scalar(a, "mul");
  require_scalar(b, "mul");
  Tensor out(1, 1);
  out(0, 0) = value(a)(0, 0) * value(b)(0, 0);
  return push(std::move(out), requires_grad(a) || requires_grad(b), [a, b](GradTape& t, const Tensor& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * t.value(b)(0, 0));
    if (t.requires_grad(b)) t.accumulate(b, g * t.value(a)(0, 0));
  });
}

Var GradTape::hinge(Var x) {
  require_scalar(x, "hinge");
  const double xv = value(x)(0, 0);
  Tensor out(1, 1);
  out(0, 0) = std::max(0.0, xv);
  const bool active = xv > 0.0;
  return push(std::move(out), requires_grad(x), [x, active](GradTape& t, const Tensor& g) {
    if (active) t.accumulate(x, g);
  });
}

Var GradTape::spectral_norm(Var m, const PowerIterationOptions& opts, Vec* warm_start) {
  const Tensor& mv = value(m);
  SpectralResult sr = spectral_decomposition(mv, opts, warm_start);
  if (warm_start != nullptr && sr.sigma > 0.0) *warm_start = sr.v;
  Tensor out(1, 1);
  out(0, 0) = sr.sigma;
  Tensor outer = sr.u * sr.v.transpose();
  return push(std::move(out), requires_grad(m), [m, outer = std::move(outer)](GradTape& t, const Tensor& g) {
    t.accumulate(m, outer * g(0, 0));
  });
}

void GradTape::backward(Var loss) {
  require_scalar(loss, "backward");
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  Node& root = nodes_[loss.id];
  if (!root.requires_grad) return;
  root.grad = Tensor::Ones(1, 1);
  root.has_grad = true;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backprop) continue;
    // Intermediate gradients are released once propagated; only leaves keep
    // theirs for grad().
    Tensor g = std::move(n.grad);
    n.has_grad = false;
    n.backprop(*this, g);
  }
}

MlpVars bind_mlp(GradTape& tape, const MlpParams& params) {
  MlpVars v;
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    v.weights.push_back(tape.variable(params.weights[i]));
    v.biases.push_back(tape.variable(params.biases[i]));
  }
  return v;
}

Var mlp_forward(GradTape& tape, const MlpVars& mlp, Var x) {
  Var h = x;
  const std::size_t last = mlp.weights.size() - 1;
  for (std::size_t i = 0; i <= last; ++i) {
    h = tape.linear(mlp.weights[i], h, mlp.biases[i]);
    if (i != last) h = tape.relu(h);
  }
  return h;
}

}  // namespace psr::nn
