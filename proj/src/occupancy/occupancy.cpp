#include "psr/occupancy/occupancy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "psr/data/dataset.hpp"
#include "psr/errors.hpp"
#include "psr/nn/adam.hpp"
#include "psr/nn/checkpoint.hpp"
#include "psr/nn/grad_tape.hpp"
#include "psr/util/io.hpp"

namespace psr::occupancy {

int OccupancyConfig::body_points() const {
  const auto [nx, ny, nz] = body_grid;
  return 2 * (nx * ny + ny * nz + nx * nz);
}

int OccupancyConfig::point_count() const { return body_points() + 8 * points_per_link; }

void OccupancyConfig::validate() const {
  for (int n : body_grid) {
    if (n < 1) throw ConfigError("occupancy body grid counts must be >= 1");
  }
  if (points_per_link < 1) throw ConfigError("occupancy points_per_link must be >= 1");
}

LegChain leg_chain(const sim::BodyGeometry& g, int leg, double abduction, double hip, double knee) {
  const double sx = leg < 2 ? 1.0 : -1.0;
  const double sy = leg % 2 == 0 ? 1.0 : -1.0;
  const Eigen::Matrix3d rx = Eigen::AngleAxisd(abduction, Eigen::Vector3d::UnitX()).toRotationMatrix();
  LegChain c;
  c.hip = Eigen::Vector3d(sx * g.hip_x, sy * g.hip_y, 0.0);
  c.knee = c.hip + rx * Eigen::Vector3d(g.upper_link * std::sin(hip), 0.0, -g.upper_link * std::cos(hip));
  c.foot = c.knee + rx * Eigen::Vector3d(g.lower_link * std::sin(hip + knee), 0.0, -g.lower_link * std::cos(hip + knee));
  return c;
}

namespace {

// Cell centres of an (na x nb) grid on the face spanned by axes a and b at
// coordinate `level` along the remaining axis.
void face_grid(PointSet& out, int& col, const Eigen::Vector3d& half, int axis_a, int na, int axis_b, int nb,
               int axis_c, double level) {
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < nb; ++j) {
      Eigen::Vector3d p;
      p[axis_a] = -half[axis_a] + (i + 0.5) * 2.0 * half[axis_a] / na;
      p[axis_b] = -half[axis_b] + (j + 0.5) * 2.0 * half[axis_b] / nb;
      p[axis_c] = level;
      out.col(col++) = p;
    }
  }
}

}  // namespace

PointSet fk_occupancy(const Joints& joints, const OccupancyConfig& config) {
  config.validate();
  PointSet pts(3, config.point_count());
  int col = 0;
  const Eigen::Vector3d half = 0.5 * config.geometry.body_size;
  const auto [nx, ny, nz] = config.body_grid;
  face_grid(pts, col, half, 0, nx, 1, ny, 2, half.z());
  face_grid(pts, col, half, 0, nx, 1, ny, 2, -half.z());
  face_grid(pts, col, half, 1, ny, 2, nz, 0, half.x());
  face_grid(pts, col, half, 1, ny, 2, nz, 0, -half.x());
  face_grid(pts, col, half, 0, nx, 2, nz, 1, half.y());
  face_grid(pts, col, half, 0, nx, 2, nz, 1, -half.y());
  const int n = config.points_per_link;
  for (int leg = 0; leg < 4; ++leg) {
    const auto k = static_cast<std::size_t>(3 * leg);
    const LegChain c = leg_chain(config.geometry, leg, joints[k], joints[k + 1], joints[k + 2]);
    for (int j = 1; j <= n; ++j) pts.col(col++) = c.hip + (c.knee - c.hip) * (static_cast<double>(j) / n);
    for (int j = 1; j <= n; ++j) pts.col(col++) = c.knee + (c.foot - c.knee) * (static_cast<double>(j) / n);
  }
  return pts;
}

double bounding_radius(const OccupancyConfig& config) {
  const auto& g = config.geometry;
  const double body = (0.5 * g.body_size).norm();
  const double legs = std::hypot(g.hip_x, g.hip_y) + g.upper_link + g.lower_link;
  return std::max(body, legs);
}

PointSet OccupancyModel::evaluate(const Joints& joints) const {
  const Eigen::Map<const Eigen::VectorXd> in(joints.data(), 12);
  const Eigen::VectorXd out = nn::mlp_forward(h, in);
  return Eigen::Map<const PointSet>(out.data(), 3, out.size() / 3);
}

Eigen::MatrixXd OccupancyModel::evaluate_batch(const Eigen::MatrixXd& joints) const {
  return nn::mlp_forward_batch(h, joints);
}

void OccupancyModel::save(const std::filesystem::path& path) const {
  std::vector<nn::NamedTensor> t;
  for (std::size_t i = 0; i < h.weights.size(); ++i) {
    t.push_back(nn::NamedTensor::from("occupancy.h.W" + std::to_string(i), h.weights[i]));
    t.push_back(nn::NamedTensor::from("occupancy.h.b" + std::to_string(i), h.biases[i]));
  }
  nn::write_checkpoint(path, t);
}

OccupancyModel OccupancyModel::load(const std::filesystem::path& path) {
  const auto t = nn::read_checkpoint(path);
  OccupancyModel m;
  for (std::size_t i = 0; nn::has_tensor(t, "occupancy.h.W" + std::to_string(i)); ++i) {
    m.h.weights.push_back(nn::find_tensor(t, "occupancy.h.W" + std::to_string(i)).to_mat());
    m.h.biases.push_back(nn::find_tensor(t, "occupancy.h.b" + std::to_string(i)).to_vec());
  }
  if (m.h.weights.empty()) throw FormatError(path.string() + ": no occupancy tensors");
  m.h.validate();
  if (m.h.input_dim() != 12 || m.h.output_dim() % 3 != 0) {
    throw DimensionError(path.string() + ": occupancy model must map 12 joints to 3M coordinates");
  }
  return m;
}

std::vector<Joints> sample_gait_configurations(int count, std::uint64_t seed, const sim::SurrogateConfig& plant,
                                               int stride) {
  if (count < 1 || stride < 1) throw DomainError("sample_gait_configurations: need count >= 1 and stride >= 1");
  nn::Rng rng(seed);
  std::vector<Joints> out;
  out.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(out.size()) < count) {
    const sim::SurrogateConfig run = sim::randomize(plant, rng, 0.2);
    const auto commands = data::sample_command_profile(rng, 60.0, run.dt);
    const auto log = data::record_trajectory(run, commands, rng());
    for (std::size_t k = 0; k < log.size() && static_cast<int>(out.size()) < count; k += static_cast<std::size_t>(stride)) {
      out.push_back(log.z[k].joints);
    }
  }
  return out;
}

namespace {

Eigen::MatrixXd joints_matrix(const std::vector<Joints>& samples, std::span<const std::size_t> idx) {
  Eigen::MatrixXd m(12, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) {
    m.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Eigen::VectorXd>(samples[idx[c]].data(), 12);
  }
  return m;
}

}  // namespace

OccupancyModel train_occupancy(const std::vector<Joints>& samples, const OccupancyConfig& config,
                               const OccupancyTrainConfig& tc, OccupancyTrainReport* report,
                               const std::function<void(int, double)>& on_epoch) {
  if (samples.empty()) throw DomainError("train_occupancy: no samples");
  if (tc.epochs < 1 || tc.batch_size < 1 || !(tc.lr > 0.0)) throw ConfigError("invalid occupancy training settings");
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index out_dim = 3 * config.point_count();
  Eigen::MatrixXd targets(out_dim, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const PointSet p = fk_occupancy(samples[i], config);
    targets.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(p.data(), out_dim);
  }

  nn::Rng rng(tc.seed);
  OccupancyModel model;
  model.h = nn::MlpParams::init(12, tc.hidden, out_dim, rng);
  model.h.biases.back() = targets.rowwise().mean();

  nn::AdamState adam;
  adam.options.lr = tc.lr;
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (report != nullptr) report->epoch_loss.clear();
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tc.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(tc.batch_size));
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      Eigen::MatrixXd target(out_dim, static_cast<Eigen::Index>(idx.size()));
      for (std::size_t c = 0; c < idx.size(); ++c) target.col(static_cast<Eigen::Index>(c)) = targets.col(static_cast<Eigen::Index>(idx[c]));

      nn::GradTape tape;
      const nn::MlpVars vars = nn::bind_mlp(tape, model.h);
      const nn::Var y = nn::mlp_forward(tape, vars, tape.constant(joints_matrix(samples, idx)));
      const double scale = 1.0 / static_cast<double>(target.size());
      const nn::Var loss = tape.scale(tape.squared_error(y, target), scale);
      const double value = tape.value(loss)(0, 0);
      if (!std::isfinite(value)) throw DivergenceError("occupancy training diverged (non-finite loss)");
      loss_sum += value * static_cast<double>(idx.size());
      tape.backward(loss);

      std::vector<nn::TensorRef> refs;
      std::vector<nn::Vec> grads;
      for (std::size_t i = 0; i < model.h.weights.size(); ++i) {
        refs.push_back(nn::tensor_ref("W" + std::to_string(i), model.h.weights[i]));
        const nn::Mat gw = tape.grad(vars.weights[i]);
        grads.emplace_back(Eigen::Map<const nn::Vec>(gw.data(), gw.size()));
        refs.push_back(nn::tensor_ref("b" + std::to_string(i), model.h.biases[i]));
        grads.emplace_back(tape.grad(vars.biases[i]));
      }
      nn::adam_step(adam, refs, grads);
    }
    const double mean_loss = loss_sum / static_cast<double>(samples.size());
    if (report != nullptr) report->epoch_loss.push_back(mean_loss);
    if (on_epoch) on_epoch(epoch + 1, mean_loss);
  }
  if (report != nullptr) report->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return model;
}

double mean_point_error(const OccupancyModel& model, const std::vector<Joints>& samples, const OccupancyConfig& config) {
  if (samples.empty()) throw DomainError("mean_point_error: no samples");
  nn::require_dims(model.point_count(), config.point_count(), "occupancy model point count");
  double total = 0.0;
  for (const Joints& j : samples) {
    total += (model.evaluate(j) - fk_occupancy(j, config)).colwise().norm().mean();
  }
  return total / static_cast<double>(samples.size());
}

std::string point_set_csv(const PointSet& points) {
  std::ostringstream os;
  os << util::csv_header_comment() << "index,x,y,z\n";
  os.precision(9);
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    os << i << ',' << points(0, i) << ',' << points(1, i) << ',' << points(2, i) << '\n';
  }
  return os.str();
}

}  // namespace psr::occupancy
