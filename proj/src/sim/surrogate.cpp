#include "psr/sim/surrogate.hpp"

#include <cmath>
#include <random>

#include "psr/errors.hpp"

namespace psr::sim {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double SurrogateConfig::standing_height() const {
  const double knee_angle = nominal_hip + nominal_knee;
  return geometry.upper_link * std::cos(nominal_hip) + geometry.lower_link * std::cos(knee_angle);
}

void SurrogateConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("surrogate.dt must be positive");
  if (!(tau > 0.0)) throw ConfigError("surrogate.tau must be positive");
  if (!(stand_exit > stand_enter)) throw ConfigError("surrogate.stand_exit must exceed surrogate.stand_enter");
  if (!(stand_enter_time > 0.0)) throw ConfigError("surrogate.stand_enter_time must be positive");
  if (measurement_noise < 0.0) throw ConfigError("surrogate.measurement_noise must be non-negative");
  if (geometry.upper_link <= 0.0 || geometry.lower_link <= 0.0) throw ConfigError("leg links must be positive");
  if ((geometry.body_size.array() <= 0.0).any()) throw ConfigError("body size must be positive");
}

SurrogateConfig randomize(const SurrogateConfig& base, nn::Rng& rng, double fraction) {
  std::uniform_real_distribution<double> f(1.0 - fraction, 1.0 + fraction);
  SurrogateConfig c = base;
  c.tau *= f(rng);
  c.gait_frequency *= f(rng);
  c.amp_c0 *= f(rng);
  c.amp_c1 *= f(rng);
  c.roll_amplitude *= f(rng);
  c.pitch_amplitude *= f(rng);
  c.roll_lateral_gain *= f(rng);
  c.roll_turn_gain *= f(rng);
  c.pitch_forward_gain *= f(rng);
  c.bob_amplitude *= f(rng);
  return c;
}

SurrogateState step(const SurrogateState& state, const Command& u, const SurrogateConfig& cfg) {
  SurrogateState s = state;
  const double u_inf = u.cwiseAbs().maxCoeff();
  if (s.standing) {
    if (u_inf >= cfg.stand_exit) {
      s.standing = false;
      s.low_speed_time = 0.0;
    }
  } else if (u_inf < cfg.stand_enter) {
    s.low_speed_time += cfg.dt;
    if (s.low_speed_time >= cfg.stand_enter_time - 1e-9) s.standing = true;
  } else {
    s.low_speed_time = 0.0;
  }

  const Eigen::Vector3d target = s.standing ? Eigen::Vector3d::Zero() : u;
  s.velocity += (cfg.dt / cfg.tau) * (target - s.velocity);

  const Eigen::Vector2d d = yaw_rotation(s.pose.yaw) * s.velocity.head<2>() * cfg.dt;
  s.pose.x += d.x();
  s.pose.y += d.y();
  s.pose.yaw += s.velocity.z() * cfg.dt;

  if (!s.standing) {
    s.phase = std::fmod(s.phase + kTwoPi * cfg.gait_frequency * cfg.dt, kTwoPi);
    if (s.phase < 0.0) s.phase += kTwoPi;
  }
  return s;
}

double joint_amplitude(const SurrogateState& state, const SurrogateConfig& cfg) {
  if (state.standing) return 0.0;
  return cfg.amp_c0 + cfg.amp_c1 * std::min(state.velocity.norm(), cfg.amp_speed_cap);
}

std::array<double, 12> nominal_joints(const SurrogateConfig& cfg) {
  std::array<double, 12> j{};
  for (int leg = 0; leg < 4; ++leg) {
    const double side = (leg % 2 == 0) ? 1.0 : -1.0;
    j[static_cast<std::size_t>(3 * leg)] = side * cfg.nominal_abduction;
    j[static_cast<std::size_t>(3 * leg + 1)] = cfg.nominal_hip;
    j[static_cast<std::size_t>(3 * leg + 2)] = cfg.nominal_knee;
  }
  return j;
}

FullBodyConfig full_config(const SurrogateState& state, const SurrogateConfig& cfg) {
  FullBodyConfig z;
  const double amp = joint_amplitude(state, cfg);
  const double active = state.standing ? 0.0 : 1.0;
  const double phi = state.phase;
  const Eigen::Vector3d& v = state.velocity;

  z.p = Eigen::Vector3d(state.pose.x, state.pose.y,
                        cfg.standing_height() + active * cfg.bob_amplitude * std::cos(2.0 * phi));
  z.yaw = state.pose.yaw;
  z.roll = active * cfg.roll_amplitude * std::sin(phi) + cfg.roll_lateral_gain * v.y() +
           cfg.roll_turn_gain * v.x() * v.z();
  z.pitch = active * cfg.pitch_amplitude * std::cos(phi) - cfg.pitch_forward_gain * v.x();

  z.joints = nominal_joints(cfg);
  for (int leg = 0; leg < 4; ++leg) {
    const double leg_phase = phi + cfg.phase_offsets[static_cast<std::size_t>(leg)];
    const double side = (leg % 2 == 0) ? 1.0 : -1.0;
    const auto k = static_cast<std::size_t>(3 * leg);
    z.joints[k] += side * cfg.abduction_ratio * amp * std::sin(leg_phase) + cfg.abduction_lateral_gain * v.y();
    z.joints[k + 1] += amp * std::sin(leg_phase);
    z.joints[k + 2] -= cfg.knee_ratio * amp * 0.5 * (1.0 - std::cos(leg_phase));
  }
  return z;
}

nn::Vec measure(const SurrogateState& state, const SurrogateConfig& cfg, nn::Rng& rng) {
  nn::Vec y = full_config(state, cfg).measured();
  if (cfg.measurement_noise > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.measurement_noise);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += noise(rng);
  }
  return y;
}

SurrogateRobot::SurrogateRobot(SurrogateConfig cfg, std::uint64_t seed, SurrogateState initial)
    : cfg_(std::move(cfg)), state_(initial), rng_(seed) {
  cfg_.validate();
}

}  // namespace psr::sim
