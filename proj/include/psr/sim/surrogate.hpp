#pragma once

#include <array>
#include <cstdint>
#include <numbers>

#include "psr/geometry.hpp"
#include "psr/model/observer_predictor.hpp"
#include "psr/nn/linalg.hpp"

namespace psr::sim {

using model::Command;

/// Rigid body and leg layout shared by the surrogate's gait law and the
/// forward-kinematics occupancy oracle. Base frame: origin at the body
/// centre, x forward, y left, z up.
struct BodyGeometry {
  Eigen::Vector3d body_size{0.8, 0.35, 0.3};
  double hip_x = 0.3;    // |x| of the hip joints
  double hip_y = 0.14;   // |y| of the hip joints
  double upper_link = 0.25;
  double lower_link = 0.28;
};

struct SurrogateConfig {
  double dt = 0.02;
  double tau = 0.3;                // velocity time constant (s)
  double gait_frequency = 2.0;     // Hz
  std::array<double, 4> phase_offsets{0.0, std::numbers::pi, std::numbers::pi, 0.0};
  double amp_c0 = 0.1;             // joint amplitude law A = c0 + c1 min(|v|, cap)
  double amp_c1 = 0.4;
  double amp_speed_cap = 0.5;
  double abduction_ratio = 0.3;    // abduction swing relative to A
  double knee_ratio = 1.2;         // knee flexion relative to A
  double abduction_lateral_gain = 0.15;  // rad per m/s of lateral velocity
  double nominal_abduction = 0.0;
  double nominal_hip = 0.7;
  double nominal_knee = -1.4;
  double roll_amplitude = 0.03;
  double pitch_amplitude = 0.02;
  double roll_lateral_gain = 0.08;   // rad per m/s of v_y
  double roll_turn_gain = 0.1;       // rad per (m/s * rad/s) of v_x * omega
  double pitch_forward_gain = 0.05;  // rad per m/s of v_x
  double bob_amplitude = 0.01;
  double stand_enter = 0.05;       // |u|_inf below this ...
  double stand_enter_time = 0.5;   // ... for this long latches standing mode
  double stand_exit = 0.1;         // |u|_inf at or above this releases it
  double measurement_noise = 0.01;
  BodyGeometry geometry;

  /// Body height above ground in the nominal stance.
  double standing_height() const;
  /// Throws ConfigError on invalid values (tau <= 0, exit <= enter, ...).
  void validate() const;
};

/// Copy of `base` with the dynamic constants scaled by independent factors
/// drawn from U[1 - fraction, 1 + fraction].
SurrogateConfig randomize(const SurrogateConfig& base, nn::Rng& rng, double fraction = 0.2);

struct SurrogateState {
  PlanarPose pose;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // body frame (v_x, v_y, omega)
  double phase = 0.0;                                  // gait phase in [0, 2 pi)
  bool standing = false;
  double low_speed_time = 0.0;
};

SurrogateState step(const SurrogateState& state, const Command& u, const SurrogateConfig& cfg);

/// Current joint amplitude of the gait law (0 while standing).
double joint_amplitude(const SurrogateState& state, const SurrogateConfig& cfg);

FullBodyConfig full_config(const SurrogateState& state, const SurrogateConfig& cfg);

/// Joint angles in the nominal stance.
std::array<double, 12> nominal_joints(const SurrogateConfig& cfg);

/// Noisy roll, pitch and joint angles (14 values).
nn::Vec measure(const SurrogateState& state, const SurrogateConfig& cfg, nn::Rng& rng);

/// Surrogate instance with its own configuration, state and seeded RNG.
class SurrogateRobot {
 public:
  SurrogateRobot(SurrogateConfig cfg, std::uint64_t seed, SurrogateState initial = {});

  const SurrogateState& state() const { return state_; }
  const SurrogateConfig& config() const { return cfg_; }
  FullBodyConfig config_space() const { return full_config(state_, cfg_); }
  nn::Vec measure() { return sim::measure(state_, cfg_, rng_); }
  void apply(const Command& u) { state_ = sim::step(state_, u, cfg_); }

 private:
  SurrogateConfig cfg_;
  SurrogateState state_;
  nn::Rng rng_;
};

}  // namespace psr::sim
