#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "psr/data/bezier.hpp"
#include "psr/geometry.hpp"
#include "psr/sim/surrogate.hpp"

namespace psr::data {

using nn::Mat;
using nn::Vec;

struct CommandProfileConfig {
  int degree = 3;
  double segment_min = 3.0;  // t_bez ~ U[segment_min, segment_max] seconds
  double segment_max = 7.0;
  double control_limit = 0.5;  // P_j ~ U[-limit, limit]^3
};

/// Random piecewise-Bezier command profile sampled at dt, covering
/// `duration` seconds (floor(duration / dt) commands).
std::vector<Command> sample_command_profile(nn::Rng& rng, double duration, double dt,
                                            const CommandProfileConfig& cfg = {});

/// Draws one segment curve (used by sample_command_profile).
CommandCurve sample_command_curve(nn::Rng& rng, const CommandProfileConfig& cfg);

/// Discretises a curve at dt: round(duration / dt) commands at s = k / n.
std::vector<Command> discretize(const CommandCurve& curve, double dt);

/// Logged run at uniform dt: command, ground-truth configuration and noisy
/// measurement for k = 0..N.
struct TrajectoryLog {
  double dt = 0.02;
  std::vector<Command> u;
  std::vector<FullBodyConfig> z;
  std::vector<Vec> y;

  std::size_t size() const { return u.size(); }
};

/// Drives a surrogate from rest with `commands`, logging before each step.
TrajectoryLog record_trajectory(const sim::SurrogateConfig& cfg, std::span<const Command> commands,
                                std::uint64_t seed);

/// One training sample: y_{0:H}, u_{0:H+T} and the targets z'_{H+1:H+T}
/// expressed in the frame of timestep H.
struct WindowSample {
  std::vector<Vec> y;        // H + 1 measurements
  std::vector<Command> u;    // H + T + 1 commands
  Mat targets;               // T x 18 relative configurations
  FramePose frame;           // pose at index H (not serialised)
  std::size_t start = 0;     // log index of the first entry (not serialised)

  int history() const { return static_cast<int>(y.size()) - 1; }
  int horizon() const { return static_cast<int>(targets.rows()); }
};

/// Overlapping windows of H + T + 1 log entries, `stride` apart. Returns an
/// empty list when the log is too short.
std::vector<WindowSample> extract_windows(const TrajectoryLog& log, int H, int T, int stride);

struct WindowDataset {
  int H = 30;
  int T = 200;
  std::vector<WindowSample> windows;
};

/// Dataset file (little-endian):
///   "PSRD", version u32,
///   n_windows, H, T, n_u, n_y, n_z   (u32 each),
///   per window: y (H+1) x n_y, u (H+T+1) x n_u, z' T x n_z, all f32 row-major.
inline constexpr std::uint32_t kDatasetVersion = 1;
void write_dataset(const std::filesystem::path& path, const WindowDataset& ds);
WindowDataset read_dataset(const std::filesystem::path& path);

struct DatasetConfig {
  double minutes = 10.0;
  double trajectory_seconds = 60.0;
  int H = 30;
  int T = 200;
  int stride = 10;
  double train_fraction = 0.8;
  double randomize_fraction = 0.2;
  CommandProfileConfig commands;
};

struct GeneratedData {
  std::vector<TrajectoryLog> logs;
  std::vector<sim::SurrogateConfig> plants;
  std::size_t train_logs = 0;  // logs [0, train_logs) train, the rest test
  WindowDataset train;
  WindowDataset test;
};

/// Simulates minutes * 60 / trajectory_seconds independent runs, each with
/// randomised plant constants, and splits whole runs 80/20 into train/test.
GeneratedData generate_dataset(const DatasetConfig& cfg, const sim::SurrogateConfig& plant, std::uint64_t seed);

}  // namespace psr::data
