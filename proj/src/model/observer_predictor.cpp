#include "psr/model/observer_predictor.hpp"

#include <string>

#include "psr/errors.hpp"

namespace psr::model {

void ObserverParams::validate() const {
  const Eigen::Index n = A.rows();
  nn::require_dims(A.cols(), n, "observer A cols");
  nn::require_dims(K.rows(), n, "observer K rows");
  nn::require_dims(K.cols(), kMeasuredDim, "observer K cols");
  nn::require_dims(C_y.rows(), kMeasuredDim, "observer C_y rows");
  nn::require_dims(C_y.cols(), n, "observer C_y cols");
  g.validate();
  nn::require_dims(g.input_dim(), n + kCommandDim, "observer g input");
  nn::require_dims(g.output_dim(), n, "observer g output");
}

void PredictorParams::validate(Eigen::Index latent) const {
  f.validate();
  nn::require_dims(f.hidden(), latent, "predictor GRU hidden size");
  nn::require_dims(f.input(), kCommandDim, "predictor GRU input size");
  nn::require_dims(C_u.rows(), kUnmeasuredDim, "predictor C_u rows");
  nn::require_dims(C_u.cols(), latent, "predictor C_u cols");
}

ModelDims ModelParams::dims() const {
  ModelDims d;
  d.latent = latent();
  d.g_hidden.clear();
  for (std::size_t i = 0; i + 1 < observer.g.weights.size(); ++i) d.g_hidden.push_back(observer.g.weights[i].rows());
  return d;
}

void ModelParams::validate() const {
  observer.validate();
  predictor.validate(latent());
}

ModelParams ModelParams::init(const ModelDims& dims, nn::Rng& rng) {
  const Eigen::Index n = dims.latent;
  if (n <= 0) throw ConfigError("latent dimension must be positive");
  ModelParams p;
  p.observer.A = nn::uniform_init(n, n, n, rng);
  p.observer.K = nn::uniform_init(n, kMeasuredDim, kMeasuredDim, rng);
  p.observer.C_y = nn::uniform_init(kMeasuredDim, n, n, rng);
  p.observer.g = nn::MlpParams::init(n + kCommandDim, dims.g_hidden, n, rng);
  p.predictor.f = nn::GruParams::init(n, kCommandDim, rng);
  p.predictor.C_u = nn::uniform_init(kUnmeasuredDim, n, n, rng);
  return p;
}

std::vector<nn::TensorRef> ModelParams::tensors() {
  std::vector<nn::TensorRef> t;
  t.push_back(nn::tensor_ref("observer.A", observer.A));
  t.push_back(nn::tensor_ref("observer.K", observer.K));
  t.push_back(nn::tensor_ref("observer.C_y", observer.C_y));
  for (std::size_t i = 0; i < observer.g.weights.size(); ++i) {
    t.push_back(nn::tensor_ref("observer.g.W" + std::to_string(i), observer.g.weights[i]));
    t.push_back(nn::tensor_ref("observer.g.b" + std::to_string(i), observer.g.biases[i]));
  }
  t.push_back(nn::tensor_ref("predictor.f.w_ih", predictor.f.w_ih));
  t.push_back(nn::tensor_ref("predictor.f.w_hh", predictor.f.w_hh));
  t.push_back(nn::tensor_ref("predictor.f.b_ih", predictor.f.b_ih));
  t.push_back(nn::tensor_ref("predictor.f.b_hh", predictor.f.b_hh));
  t.push_back(nn::tensor_ref("predictor.C_u", predictor.C_u));
  return t;
}

std::vector<nn::NamedTensor> ModelParams::to_named() const {
  using nn::NamedTensor;
  std::vector<NamedTensor> t;
  t.push_back(NamedTensor::from("observer.A", observer.A));
  t.push_back(NamedTensor::from("observer.K", observer.K));
  t.push_back(NamedTensor::from("observer.C_y", observer.C_y));
  for (std::size_t i = 0; i < observer.g.weights.size(); ++i) {
    t.push_back(NamedTensor::from("observer.g.W" + std::to_string(i), observer.g.weights[i]));
    t.push_back(NamedTensor::from("observer.g.b" + std::to_string(i), observer.g.biases[i]));
  }
  t.push_back(NamedTensor::from("predictor.f.w_ih", predictor.f.w_ih));
  t.push_back(NamedTensor::from("predictor.f.w_hh", predictor.f.w_hh));
  t.push_back(NamedTensor::from("predictor.f.b_ih", predictor.f.b_ih));
  t.push_back(NamedTensor::from("predictor.f.b_hh", predictor.f.b_hh));
  t.push_back(NamedTensor::from("predictor.C_u", predictor.C_u));
  return t;
}

ModelParams ModelParams::from_named(const std::vector<nn::NamedTensor>& tensors) {
  using nn::find_tensor;
  ModelParams p;
  p.observer.A = find_tensor(tensors, "observer.A").to_mat();
  p.observer.K = find_tensor(tensors, "observer.K").to_mat();
  p.observer.C_y = find_tensor(tensors, "observer.C_y").to_mat();
  for (std::size_t i = 0; nn::has_tensor(tensors, "observer.g.W" + std::to_string(i)); ++i) {
    p.observer.g.weights.push_back(find_tensor(tensors, "observer.g.W" + std::to_string(i)).to_mat());
    p.observer.g.biases.push_back(find_tensor(tensors, "observer.g.b" + std::to_string(i)).to_vec());
  }
  p.predictor.f.w_ih = find_tensor(tensors, "predictor.f.w_ih").to_mat();
  p.predictor.f.w_hh = find_tensor(tensors, "predictor.f.w_hh").to_mat();
  p.predictor.f.b_ih = find_tensor(tensors, "predictor.f.b_ih").to_vec();
  p.predictor.f.b_hh = find_tensor(tensors, "predictor.f.b_hh").to_vec();
  p.predictor.C_u = find_tensor(tensors, "predictor.C_u").to_mat();
  p.validate();
  return p;
}

void ModelParams::save(const std::filesystem::path& path) const { nn::write_checkpoint(path, to_named()); }

ModelParams ModelParams::load(const std::filesystem::path& path) {
  return from_named(nn::read_checkpoint(path));
}

LatentState observer_step(const ObserverParams& obs, const LatentState& state, const Command& u,
                          const Vec& y) {
  const Eigen::Index n = obs.latent();
  nn::require_dims(state.x.size(), n, "observer_step latent state");
  nn::require_dims(y.size(), kMeasuredDim, "observer_step measurement");
  Vec gin(n + kCommandDim);
  gin.head(n) = state.x;
  gin.tail(kCommandDim) = u;
  LatentState next;
  next.x = obs.A * state.x + nn::mlp_forward(obs.g, gin) + obs.K * (y - obs.C_y * state.x);
  return next;
}

LatentState observer_unroll(const ObserverParams& obs, LatentState x0, std::span<const Vec> ys,
                            std::span<const Command> us) {
  if (ys.empty()) throw DomainError("observer_unroll: empty history");
  nn::require_dims(static_cast<Eigen::Index>(us.size()), static_cast<Eigen::Index>(ys.size()),
                   "observer_unroll command history length");
  for (std::size_t k = 0; k + 1 < ys.size(); ++k) x0 = observer_step(obs, x0, us[k], ys[k]);
  return x0;
}

std::vector<double> observer_output_errors(const ObserverParams& obs, LatentState x0,
                                           std::span<const Vec> ys, std::span<const Command> us) {
  if (ys.empty()) throw DomainError("observer_output_errors: empty history");
  nn::require_dims(static_cast<Eigen::Index>(us.size()), static_cast<Eigen::Index>(ys.size()),
                   "observer_output_errors command history length");
  std::vector<double> err;
  err.reserve(ys.size());
  for (std::size_t k = 0; k < ys.size(); ++k) {
    err.push_back((ys[k] - obs.C_y * x0.x).norm());
    if (k + 1 < ys.size()) x0 = observer_step(obs, x0, us[k], ys[k]);
  }
  return err;
}

Vec output_map(const PredictorParams& pred, const Mat& C_y, const Vec& x) {
  Vec z(kConfigDim);
  z.head(kUnmeasuredDim) = pred.C_u * x;
  z.tail(kMeasuredDim) = C_y * x;
  return z;
}

Mat predict(const PredictorParams& pred, const Mat& C_y, const LatentState& x,
            std::span<const Command> commands) {
  nn::require_dims(x.x.size(), pred.f.hidden(), "predict latent state");
  Mat out(static_cast<Eigen::Index>(commands.size()), kConfigDim);
  Vec h = x.x;
  for (std::size_t t = 0; t < commands.size(); ++t) {
    h = nn::gru_step(pred.f, h, commands[t]);
    out.row(static_cast<Eigen::Index>(t)) = output_map(pred, C_y, h).transpose();
  }
  return out;
}

}  // namespace psr::model
