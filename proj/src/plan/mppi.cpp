#include "psr/plan/mppi.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "psr/data/bezier.hpp"
#include "psr/errors.hpp"
#include "psr/model/cv_baseline.hpp"
#include "psr/util/parallel.hpp"

namespace psr::plan {

const char* to_string(PredictorKind k) { return k == PredictorKind::kLearned ? "learned" : "cv"; }

PredictorKind parse_predictor(const std::string& name) {
  if (name == "learned") return PredictorKind::kLearned;
  if (name == "cv") return PredictorKind::kConstantVelocity;
  throw ConfigError("unknown predictor '" + name + "' (expected learned or cv)");
}

MppiPlanner::MppiPlanner(MppiConfig config, PredictorKind kind, const model::ModelParams* model,
                         BodyOccupancy occupancy, VoxelMap map)
    : config_(std::move(config)), kind_(kind), occupancy_(std::move(occupancy)), map_(std::move(map)) {
  config_.validate();
  if (kind_ == PredictorKind::kLearned) {
    if (model == nullptr) throw ConfigError("the learned predictor needs a model checkpoint");
    model->validate();
    model_ = *model;
    fast_ = model::BatchPredictor32(model_->predictor, model_->observer.C_y);
  }
  if (occupancy_.source == OccupancySource::kLearned) {
    for (std::size_t i = 0; i < occupancy_.learned.h.weights.size(); ++i) {
      h_weights_.push_back(occupancy_.learned.h.weights[i].cast<float>());
      h_biases_.push_back(occupancy_.learned.h.biases[i].cast<float>());
    }
  }
  radius_ = occupancy_.radius();
  const int T = config_.horizon, d = config_.degree;
  basis_.resize(T, d + 1);
  for (int t = 0; t < T; ++t) {
    const double s = static_cast<double>(t) / (T - 1);
    for (int j = 0; j <= d; ++j) basis_(t, j) = data::binomial(d, j) * std::pow(1.0 - s, d - j) * std::pow(s, j);
  }
}

std::vector<Command> MppiPlanner::commands(std::span<const Command> points) const {
  nn::require_dims(static_cast<Eigen::Index>(points.size()), config_.degree + 1, "mppi control point count");
  std::vector<Command> out(static_cast<std::size_t>(config_.horizon));
  for (int t = 0; t < config_.horizon; ++t) {
    Command u = Command::Zero();
    for (int j = 0; j <= config_.degree; ++j) u += basis_(t, j) * points[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(t)] = clamp_command(u, config_.command_limit);
  }
  return out;
}

std::vector<Command> MppiPlanner::shift(std::span<const Command> points, int steps) const {
  const double s0 = static_cast<double>(steps) / (config_.horizon - 1);
  std::vector<Command> out = data::bezier_subsegment(points, s0, 1.0 + s0);
  for (Command& p : out) p = clamp_command(p, config_.command_limit);
  return out;
}

std::vector<FullBodyConfig> MppiPlanner::rollout(const model::LatentState& x, const FramePose& pose,
                                                 std::span<const Command> commands) const {
  std::vector<FullBodyConfig> out;
  out.reserve(commands.size());
  if (kind_ == PredictorKind::kLearned) {
    const nn::Mat rel = model::predict(model_->predictor, model_->observer.C_y, x, commands);
    for (Eigen::Index t = 0; t < rel.rows(); ++t) {
      out.push_back(global_project(RelativeConfig::from_vector(rel.row(t).transpose()), pose));
    }
    return out;
  }
  const auto poses = model::cv_rollout(PlanarPose{pose.p.x(), pose.p.y(), pose.yaw}, commands, config_.dt);
  const auto joints = sim::nominal_joints(sim::SurrogateConfig{});
  for (const PlanarPose& q : poses) {
    FullBodyConfig z;
    z.p = Eigen::Vector3d(q.x, q.y, pose.p.z());
    z.yaw = q.yaw;
    z.joints = joints;
    out.push_back(z);
  }
  return out;
}

int MppiPlanner::count_hits(const Query& q, const float* pts, Eigen::Index m) const {
  const double c = std::cos(static_cast<double>(q.yaw)), s = std::sin(static_cast<double>(q.yaw));
  int hits = 0;
  for (Eigen::Index k = 0; k < m; ++k) {
    const double ox = pts[3 * k], oy = pts[3 * k + 1], oz = pts[3 * k + 2];
    hits += map_.occupied(q.x + c * ox - s * oy, q.y + s * ox + c * oy, q.z + oz) ? 1 : 0;
  }
  return hits;
}

MppiResult MppiPlanner::step(const model::LatentState& x, const FramePose& pose, std::span<const Command> nominal,
                             const GoalPose& goal, nn::Rng& rng) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const int N = config_.samples, T = config_.horizon, d1 = config_.degree + 1;
  nn::require_dims(static_cast<Eigen::Index>(nominal.size()), d1, "mppi nominal control point count");
  if (kind_ == PredictorKind::kLearned) nn::require_dims(x.x.size(), fast_.latent(), "mppi latent state");

  // Perturbed control points and their clamped command sequences.
  std::normal_distribution<double> normal(0.0, 1.0);
  sample_points_.resize(static_cast<std::size_t>(N) * d1);
  for (int i = 0; i < N; ++i) {
    const bool keep = config_.include_nominal && i == 0;
    for (int j = 0; j < d1; ++j) {
      Command p = nominal[static_cast<std::size_t>(j)];
      if (!keep) {
        for (int c = 0; c < 3; ++c) p[c] += config_.sigma[c] * normal(rng);
      }
      sample_points_[static_cast<std::size_t>(i) * d1 + j] = p;
    }
  }
  std::vector<Command> cmds(static_cast<std::size_t>(N) * T);
  commands32_.resize(static_cast<std::size_t>(N) * T * 3);
  for (int i = 0; i < N; ++i) {
    const Command* P = &sample_points_[static_cast<std::size_t>(i) * d1];
    for (int t = 0; t < T; ++t) {
      Command u = Command::Zero();
      for (int j = 0; j < d1; ++j) u += basis_(t, j) * P[j];
      u = clamp_command(u, config_.command_limit);
      cmds[static_cast<std::size_t>(i) * T + t] = u;
      float* dst = &commands32_[(static_cast<std::size_t>(t) * N + i) * 3];
      for (int c = 0; c < 3; ++c) dst[c] = static_cast<float>(u[c]);
    }
  }

  MppiResult result;
  const auto t1 = Clock::now();
  if (kind_ == PredictorKind::kLearned) {
    outputs32_.resize(static_cast<std::size_t>(N) * T * model::kConfigDim);
    fast_.rollout(x.x, commands32_.data(), N, T, outputs32_.data());
  }
  const auto t2 = Clock::now();

  // Goal and control terms, and the list of collision queries.
  result.costs.assign(static_cast<std::size_t>(N), 0.0);
  queries_.clear();
  const double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);
  const bool check = !map_.empty() && config_.w_collision > 0.0;
  const auto stance = sim::nominal_joints(sim::SurrogateConfig{});
  for (int i = 0; i < N; ++i) {
    double J = 0.0;
    Eigen::Vector2d prev = pose.p.head<2>();
    PlanarPose q{pose.p.x(), pose.p.y(), pose.yaw};
    for (int t = 0; t < T; ++t) {
      const Command& u = cmds[static_cast<std::size_t>(i) * T + t];
      double wx, wy, wz, wyaw;
      const float* o = nullptr;
      if (kind_ == PredictorKind::kLearned) {
        o = &outputs32_[(static_cast<std::size_t>(t) * N + i) * model::kConfigDim];
        wx = pose.p.x() + cy * o[0] - sy * o[1];
        wy = pose.p.y() + sy * o[0] + cy * o[1];
        wz = pose.p.z() + o[2];
        wyaw = pose.yaw + o[3];
      } else {
        const double c = std::cos(q.yaw), s = std::sin(q.yaw);
        q.x += (c * u[0] - s * u[1]) * config_.dt;
        q.y += (s * u[0] + c * u[1]) * config_.dt;
        q.yaw += u[2] * config_.dt;
        wx = q.x;
        wy = q.y;
        wz = pose.p.z();
        wyaw = q.yaw;
      }
      const Eigen::Vector2d xy(wx, wy);
      J += config_.w_goal * goal_cost(xy, wyaw, prev, goal, config_).total();
      J += config_.w_control * control_cost(u);
      prev = xy;
      if (check && (t + 1) % config_.collision_stride == 0 && map_.clearance(wx, wy) <= radius_) {
        Query qr{i, static_cast<float>(wx), static_cast<float>(wy), static_cast<float>(wz), static_cast<float>(wyaw), {}};
        if (o != nullptr) {
          for (int k = 0; k < 12; ++k) qr.joints[static_cast<std::size_t>(k)] = o[6 + k];
        } else {
          for (std::size_t k = 0; k < 12; ++k) qr.joints[k] = static_cast<float>(stance[k]);
        }
        queries_.push_back(qr);
      }
    }
    result.costs[static_cast<std::size_t>(i)] = J;
  }

  // Collision queries, batched through the occupancy model.
  std::vector<int> hits(queries_.size(), 0);
  const Eigen::Index M = occupancy_.config.point_count();
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (queries_.size() + kChunk - 1) / kChunk;
  util::parallel_for(chunks, config_.threads, [&](std::size_t cb, std::size_t ce) {
    Eigen::MatrixXf in(12, static_cast<Eigen::Index>(kChunk));
    Eigen::Matrix<float, 3, Eigen::Dynamic> one;
    for (std::size_t ch = cb; ch < ce; ++ch) {
      const std::size_t begin = ch * kChunk, end = std::min(queries_.size(), begin + kChunk);
      const auto n = static_cast<Eigen::Index>(end - begin);
      switch (occupancy_.source) {
        case OccupancySource::kLearned: {
          for (Eigen::Index c = 0; c < n; ++c) {
            in.col(c) = Eigen::Map<const Eigen::VectorXf>(queries_[begin + static_cast<std::size_t>(c)].joints.data(), 12);
          }
          Eigen::MatrixXf h = in.leftCols(n);
          for (std::size_t l = 0; l < h_weights_.size(); ++l) {
            Eigen::MatrixXf next = h_weights_[l] * h;
            next.colwise() += h_biases_[l];
            if (l + 1 < h_weights_.size()) next = next.cwiseMax(0.0f);
            h = std::move(next);
          }
          for (Eigen::Index c = 0; c < n; ++c) hits[begin + static_cast<std::size_t>(c)] = count_hits(queries_[begin + static_cast<std::size_t>(c)], h.col(c).data(), M);
          break;
        }
        case OccupancySource::kOracle: {
          for (std::size_t k = begin; k < end; ++k) {
            occupancy::Joints j{};
            for (std::size_t a = 0; a < 12; ++a) j[a] = queries_[k].joints[a];
            one = occupancy::fk_occupancy(j, occupancy_.config).cast<float>();
            hits[k] = count_hits(queries_[k], one.data(), one.cols());
          }
          break;
        }
        case OccupancySource::kStatic: {
          if (one.cols() != occupancy_.static_points.cols()) one = occupancy_.static_points.cast<float>();
          for (std::size_t k = begin; k < end; ++k) hits[k] = count_hits(queries_[k], one.data(), one.cols());
          break;
        }
      }
    }
  });
  for (std::size_t k = 0; k < queries_.size(); ++k) {
    result.costs[static_cast<std::size_t>(queries_[k].sample)] +=
        config_.w_collision * config_.collision_stride * hits[k];
  }
  const auto t3 = Clock::now();

  result.weights = mppi_weights(result.costs, config_.temperature);
  result.points.assign(static_cast<std::size_t>(d1), Command::Zero());
  for (int i = 0; i < N; ++i) {
    const double w = result.weights[static_cast<std::size_t>(i)];
    if (w == 0.0) continue;
    for (int j = 0; j < d1; ++j) result.points[static_cast<std::size_t>(j)] += w * sample_points_[static_cast<std::size_t>(i) * d1 + j];
  }
  result.command = clamp_command(result.points.front(), config_.command_limit);

  auto& dg = result.diagnostics;
  double sum = 0.0, sq = 0.0;
  int finite = 0;
  dg.min_cost = std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; ++i) {
    const double c = result.costs[static_cast<std::size_t>(i)];
    if (std::isfinite(c)) {
      sum += c;
      ++finite;
      if (c < dg.min_cost) {
        dg.min_cost = c;
        dg.best_sample = i;
      }
    }
    sq += result.weights[static_cast<std::size_t>(i)] * result.weights[static_cast<std::size_t>(i)];
  }
  dg.mean_cost = sum / finite;
  dg.effective_samples = 1.0 / sq;
  dg.collision_queries = static_cast<int>(queries_.size());
  dg.rollout_seconds = std::chrono::duration<double>(t2 - t1).count();
  dg.cost_seconds = std::chrono::duration<double>(t3 - t2).count();
  dg.total_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return result;
}

}  // namespace psr::plan
