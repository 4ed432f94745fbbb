#include "psr/data/dataset.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "psr/errors.hpp"
#include "psr/util/io.hpp"

namespace psr::data {

CommandCurve sample_command_curve(nn::Rng& rng, const CommandProfileConfig& cfg) {
  std::uniform_real_distribution<double> dur(cfg.segment_min, cfg.segment_max);
  std::uniform_real_distribution<double> coord(-cfg.control_limit, cfg.control_limit);
  CommandCurve c;
  c.duration = dur(rng);
  for (int j = 0; j <= cfg.degree; ++j) c.points.emplace_back(coord(rng), coord(rng), coord(rng));
  return c;
}

std::vector<Command> discretize(const CommandCurve& curve, double dt) {
  const long n = std::max(1L, std::lround(curve.duration / dt));
  std::vector<Command> out;
  out.reserve(static_cast<std::size_t>(n));
  for (long k = 0; k < n; ++k) out.push_back(bezier_eval(curve, static_cast<double>(k) / static_cast<double>(n)));
  return out;
}

std::vector<Command> sample_command_profile(nn::Rng& rng, double duration, double dt,
                                            const CommandProfileConfig& cfg) {
  if (!(duration > 0.0)) throw DomainError("sample_command_profile: duration must be positive");
  if (cfg.degree < 1) throw ConfigError("command profile degree must be at least 1");
  const auto total = static_cast<std::size_t>(std::floor(duration / dt + 1e-9));
  std::vector<Command> out;
  out.reserve(total);
  while (out.size() < total) {
    for (const Command& u : discretize(sample_command_curve(rng, cfg), dt)) {
      if (out.size() == total) break;
      out.push_back(u);
    }
  }
  return out;
}

TrajectoryLog record_trajectory(const sim::SurrogateConfig& cfg, std::span<const Command> commands,
                                std::uint64_t seed) {
  sim::SurrogateRobot robot(cfg, seed);
  TrajectoryLog log;
  log.dt = cfg.dt;
  log.u.reserve(commands.size());
  log.z.reserve(commands.size());
  log.y.reserve(commands.size());
  for (const Command& u : commands) {
    log.z.push_back(robot.config_space());
    log.y.push_back(robot.measure());
    log.u.push_back(u);
    robot.apply(u);
  }
  return log;
}

std::vector<WindowSample> extract_windows(const TrajectoryLog& log, int H, int T, int stride) {
  if (H < 0 || T < 1 || stride < 1) throw DomainError("extract_windows: need H >= 0, T >= 1, stride >= 1");
  std::vector<WindowSample> out;
  const std::size_t len = static_cast<std::size_t>(H + T + 1);
  if (log.size() < len) return out;
  for (std::size_t start = 0; start + len <= log.size(); start += static_cast<std::size_t>(stride)) {
    WindowSample w;
    w.start = start;
    const FullBodyConfig& ref = log.z[start + static_cast<std::size_t>(H)];
    w.frame = FramePose{ref.p, ref.yaw};
    w.y.assign(log.y.begin() + static_cast<std::ptrdiff_t>(start),
               log.y.begin() + static_cast<std::ptrdiff_t>(start + static_cast<std::size_t>(H) + 1));
    w.u.assign(log.u.begin() + static_cast<std::ptrdiff_t>(start),
               log.u.begin() + static_cast<std::ptrdiff_t>(start + len));
    w.targets.resize(T, model::kConfigDim);
    for (int t = 1; t <= T; ++t) {
      const FullBodyConfig& z = log.z[start + static_cast<std::size_t>(H + t)];
      w.targets.row(t - 1) = robocentric(z, w.frame).to_vector().transpose();
    }
    out.push_back(std::move(w));
  }
  return out;
}

namespace {

void write_f32(std::ostream& os, double v) { util::write_pod(os, static_cast<float>(v)); }

double read_f32(std::istream& is, const std::filesystem::path& path) {
  float f = 0.0f;
  if (!util::read_pod(is, f)) throw FormatError(path.string() + ": truncated window data");
  return static_cast<double>(f);
}

}  // namespace

void write_dataset(const std::filesystem::path& path, const WindowDataset& ds) {
  std::ostringstream os(std::ios::binary);
  os.write("PSRD", 4);
  util::write_pod(os, kDatasetVersion);
  const std::uint32_t header[6] = {static_cast<std::uint32_t>(ds.windows.size()),
                                   static_cast<std::uint32_t>(ds.H),
                                   static_cast<std::uint32_t>(ds.T),
                                   static_cast<std::uint32_t>(model::kCommandDim),
                                   static_cast<std::uint32_t>(model::kMeasuredDim),
                                   static_cast<std::uint32_t>(model::kConfigDim)};
  for (std::uint32_t h : header) util::write_pod(os, h);
  for (const WindowSample& w : ds.windows) {
    if (w.history() != ds.H || w.horizon() != ds.T || static_cast<int>(w.u.size()) != ds.H + ds.T + 1) {
      throw DimensionError("write_dataset: window shape does not match dataset H/T");
    }
    for (const Vec& y : w.y) {
      for (Eigen::Index i = 0; i < y.size(); ++i) write_f32(os, y[i]);
    }
    for (const Command& u : w.u) {
      for (int i = 0; i < 3; ++i) write_f32(os, u[i]);
    }
    for (Eigen::Index t = 0; t < w.targets.rows(); ++t) {
      for (Eigen::Index d = 0; d < w.targets.cols(); ++d) write_f32(os, w.targets(t, d));
    }
  }
  util::write_file_atomic(path, os.str());
}

WindowDataset read_dataset(const std::filesystem::path& path) {
  const std::string bytes = util::read_file(path);
  std::istringstream is(bytes, std::ios::binary);
  char magic[4];
  if (!is.read(magic, 4) || std::string_view(magic, 4) != "PSRD") {
    throw FormatError(path.string() + ": not a dataset file (bad magic)");
  }
  std::uint32_t version = 0;
  if (!util::read_pod(is, version) || version != kDatasetVersion) {
    throw FormatError(path.string() + ": unsupported dataset version " + std::to_string(version));
  }
  std::uint32_t h[6];
  for (auto& v : h) {
    if (!util::read_pod(is, v)) throw FormatError(path.string() + ": truncated header");
  }
  if (h[3] != model::kCommandDim || h[4] != model::kMeasuredDim || h[5] != model::kConfigDim) {
    throw DimensionError(path.string() + ": dataset dimensions (n_u, n_y, n_z) do not match (3, 14, 18)");
  }
  WindowDataset ds;
  ds.H = static_cast<int>(h[1]);
  ds.T = static_cast<int>(h[2]);
  const std::uint64_t per_window = (static_cast<std::uint64_t>(ds.H) + 1) * h[4] +
                                   (static_cast<std::uint64_t>(ds.H) + ds.T + 1) * h[3] +
                                   static_cast<std::uint64_t>(ds.T) * h[5];
  if (bytes.size() != 32 + per_window * h[0] * sizeof(float)) {
    throw FormatError(path.string() + ": file size does not match header counts");
  }
  ds.windows.resize(h[0]);
  for (WindowSample& w : ds.windows) {
    w.y.assign(static_cast<std::size_t>(ds.H + 1), Vec(model::kMeasuredDim));
    for (Vec& y : w.y) {
      for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = read_f32(is, path);
    }
    w.u.assign(static_cast<std::size_t>(ds.H + ds.T + 1), Command::Zero());
    for (Command& u : w.u) {
      for (int i = 0; i < 3; ++i) u[i] = read_f32(is, path);
    }
    w.targets.resize(ds.T, model::kConfigDim);
    for (Eigen::Index t = 0; t < w.targets.rows(); ++t) {
      for (Eigen::Index d = 0; d < w.targets.cols(); ++d) w.targets(t, d) = read_f32(is, path);
    }
  }
  return ds;
}

GeneratedData generate_dataset(const DatasetConfig& cfg, const sim::SurrogateConfig& plant, std::uint64_t seed) {
  plant.validate();
  if (!(cfg.minutes > 0.0) || !(cfg.trajectory_seconds > 0.0)) throw ConfigError("dataset duration must be positive");
  const int runs = std::max(1, static_cast<int>(std::lround(cfg.minutes * 60.0 / cfg.trajectory_seconds)));
  nn::Rng rng(seed);
  GeneratedData out;
  out.train.H = out.test.H = cfg.H;
  out.train.T = out.test.T = cfg.T;
  out.train_logs = static_cast<std::size_t>(std::clamp(
      static_cast<int>(std::lround(cfg.train_fraction * runs)), 1, std::max(1, runs - 1)));
  for (int r = 0; r < runs; ++r) {
    const sim::SurrogateConfig run_plant = randomize(plant, rng, cfg.randomize_fraction);
    const std::vector<Command> commands = sample_command_profile(rng, cfg.trajectory_seconds, plant.dt, cfg.commands);
    const std::uint64_t noise_seed = rng();
    out.logs.push_back(record_trajectory(run_plant, commands, noise_seed));
    out.plants.push_back(run_plant);
    auto windows = extract_windows(out.logs.back(), cfg.H, cfg.T, cfg.stride);
    auto& dst = (static_cast<std::size_t>(r) < out.train_logs) ? out.train.windows : out.test.windows;
    for (auto& w : windows) dst.push_back(std::move(w));
  }
  return out;
}

}  // namespace psr::data
