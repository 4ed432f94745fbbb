#include "psr/config/config.hpp"

#include <set>

#include <json.hpp>

#include "psr/errors.hpp"
#include "psr/util/io.hpp"

namespace psr::config {

using nlohmann::json;

namespace {

// Binds named fields of one section either from JSON (reading) or to JSON
// (writing), so both directions share a single key list.
class Section {
 public:
  Section(const json* in, json* out, std::string name) : in_(in), out_(out), name_(std::move(name)) {}

  template <class T>
  void field(const char* key, T& value) {
    seen_.insert(key);
    if (out_ != nullptr) {
      (*out_)[key] = to_json(value);
      return;
    }
    if (in_ == nullptr || !in_->contains(key)) return;
    try {
      from_json(in_->at(key), value);
    } catch (const json::exception&) {
      throw ConfigError("config key '" + name_ + "." + key + "' has the wrong type");
    }
  }

  void finish() const {
    if (in_ == nullptr) return;
    if (!in_->is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
    for (const auto& [key, value] : in_->items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + name_ + "." + key + "'");
    }
  }

 private:
  template <class T>
  static json to_json(const T& v) {
    if constexpr (std::is_same_v<T, Eigen::Vector3d>) {
      return json::array({v.x(), v.y(), v.z()});
    } else {
      return json(v);
    }
  }

  template <class T>
  static void from_json(const json& j, T& v) {
    if constexpr (std::is_same_v<T, Eigen::Vector3d>) {
      if (!j.is_array() || j.size() != 3) throw json::type_error::create(302, "expected 3 numbers", &j);
      v = Eigen::Vector3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw json::type_error::create(302, "expected boolean", &j);
      v = j.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!j.is_number_integer()) throw json::type_error::create(302, "expected integer", &j);
      v = j.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j.is_number()) throw json::type_error::create(302, "expected number", &j);
      v = j.get<T>();
    } else {
      v = j.get<T>();
    }
  }

  const json* in_;
  json* out_;
  std::string name_;
  std::set<std::string> seen_;
};

template <class Fn>
void visit(const json* in, json* out, const char* name, Fn&& fn) {
  const json* sub = nullptr;
  if (in != nullptr && in->contains(name)) sub = &in->at(name);
  json* dst = nullptr;
  if (out != nullptr) dst = &(*out)[name];
  Section s(sub, dst, name);
  fn(s);
  s.finish();
}

void bind_all(GlobalConfig& c, const json* in, json* out) {
  visit(in, out, "surrogate", [&](Section& s) {
    auto& v = c.surrogate;
    s.field("dt", v.dt);
    s.field("tau", v.tau);
    s.field("gait_frequency", v.gait_frequency);
    s.field("phase_offsets", v.phase_offsets);
    s.field("amp_c0", v.amp_c0);
    s.field("amp_c1", v.amp_c1);
    s.field("amp_speed_cap", v.amp_speed_cap);
    s.field("abduction_ratio", v.abduction_ratio);
    s.field("knee_ratio", v.knee_ratio);
    s.field("abduction_lateral_gain", v.abduction_lateral_gain);
    s.field("nominal_abduction", v.nominal_abduction);
    s.field("nominal_hip", v.nominal_hip);
    s.field("nominal_knee", v.nominal_knee);
    s.field("roll_amplitude", v.roll_amplitude);
    s.field("pitch_amplitude", v.pitch_amplitude);
    s.field("roll_lateral_gain", v.roll_lateral_gain);
    s.field("roll_turn_gain", v.roll_turn_gain);
    s.field("pitch_forward_gain", v.pitch_forward_gain);
    s.field("bob_amplitude", v.bob_amplitude);
    s.field("stand_enter", v.stand_enter);
    s.field("stand_enter_time", v.stand_enter_time);
    s.field("stand_exit", v.stand_exit);
    s.field("measurement_noise", v.measurement_noise);
    s.field("body_size", v.geometry.body_size);
    s.field("hip_x", v.geometry.hip_x);
    s.field("hip_y", v.geometry.hip_y);
    s.field("upper_link", v.geometry.upper_link);
    s.field("lower_link", v.geometry.lower_link);
  });
  visit(in, out, "dataset", [&](Section& s) {
    auto& v = c.dataset;
    s.field("minutes", v.minutes);
    s.field("trajectory_seconds", v.trajectory_seconds);
    s.field("history", v.H);
    s.field("horizon", v.T);
    s.field("stride", v.stride);
    s.field("train_fraction", v.train_fraction);
    s.field("randomize_fraction", v.randomize_fraction);
    s.field("degree", v.commands.degree);
    s.field("segment_min", v.commands.segment_min);
    s.field("segment_max", v.commands.segment_max);
    s.field("control_limit", v.commands.control_limit);
  });
  visit(in, out, "model", [&](Section& s) {
    s.field("latent", c.training.dims.latent);
    s.field("g_hidden", c.training.dims.g_hidden);
  });
  visit(in, out, "training", [&](Section& s) {
    auto& v = c.training;
    s.field("alpha", v.alpha);
    s.field("eps", v.eps);
    s.field("epochs", v.epochs);
    s.field("batch_size", v.batch_size);
    s.field("lr", v.lr);
    s.field("seed", v.seed);
    s.field("stability", v.stability);
    s.field("clip_norm", v.clip_norm);
    s.field("eval_windows", v.eval_windows);
  });
  visit(in, out, "evaluation", [&](Section& s) {
    auto& v = c.evaluation;
    s.field("observer_draws", v.observer_draws);
    s.field("init_range", v.init_range);
    s.field("seed", v.seed);
    s.field("max_windows", v.max_windows);
  });
  visit(in, out, "stability", [&](Section& s) {
    auto& v = c.stability;
    s.field("trials", v.trials);
    s.field("steps", v.steps);
    s.field("eps_max", v.eps_max);
    s.field("initial_error", v.initial_error);
    s.field("command_limit", v.command_limit);
    s.field("seed", v.seed);
    s.field("trace_trials", v.trace_trials);
    s.field("slack", v.slack);
    s.field("threads", v.threads);
  });
  visit(in, out, "occupancy", [&](Section& s) {
    s.field("body_grid", c.occupancy.body_grid);
    s.field("points_per_link", c.occupancy.points_per_link);
    s.field("samples", c.occupancy_samples);
    s.field("hidden", c.occupancy_training.hidden);
    s.field("epochs", c.occupancy_training.epochs);
    s.field("batch_size", c.occupancy_training.batch_size);
    s.field("lr", c.occupancy_training.lr);
    s.field("seed", c.occupancy_training.seed);
  });
  visit(in, out, "mppi", [&](Section& s) {
    auto& v = c.navigation.mppi;
    s.field("samples", v.samples);
    s.field("horizon", v.horizon);
    s.field("temperature", v.temperature);
    s.field("sigma", v.sigma);
    s.field("degree", v.degree);
    s.field("w_collision", v.w_collision);
    s.field("w_goal", v.w_goal);
    s.field("w_control", v.w_control);
    s.field("d_switch", v.d_switch);
    s.field("s_switch", v.s_switch);
    s.field("command_limit", v.command_limit);
    s.field("collision_stride", v.collision_stride);
    s.field("include_nominal", v.include_nominal);
    s.field("threads", v.threads);
  });
  visit(in, out, "navigation", [&](Section& s) {
    auto& v = c.navigation;
    s.field("max_duration", v.max_duration);
    s.field("success_distance", v.success_distance);
    s.field("success_yaw", v.success_yaw);
    s.field("hold_time", v.hold_time);
    s.field("replan_steps", v.replan_steps);
    s.field("pose_noise", v.pose_noise);
  });
}

// Values that several sections share are derived from the surrogate.
void propagate(GlobalConfig& c) {
  c.navigation.plant = c.surrogate;
  c.navigation.mppi.dt = c.surrogate.dt;
  c.evaluation.dt = c.surrogate.dt;
  c.occupancy.geometry = c.surrogate.geometry;
}

}  // namespace

void GlobalConfig::validate() const {
  surrogate.validate();
  training.validate();
  occupancy.validate();
  navigation.validate();
  if (dataset.H < 0 || dataset.T < 1 || dataset.stride < 1) throw ConfigError("dataset history/horizon/stride invalid");
  if (!(dataset.train_fraction > 0.0 && dataset.train_fraction < 1.0)) {
    throw ConfigError("dataset train_fraction must lie in (0, 1)");
  }
  if (!(dataset.commands.segment_min > 0.0) || dataset.commands.segment_max < dataset.commands.segment_min) {
    throw ConfigError("dataset segment durations invalid");
  }
  if (stability.trials < 1 || stability.steps < 2 || stability.eps_max < 0.0) {
    throw ConfigError("stability verification settings invalid");
  }
  if (occupancy_samples < 10) throw ConfigError("occupancy samples must be >= 10");
}

GlobalConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> sections{"surrogate", "dataset",   "model", "training", "evaluation",
                                              "stability", "occupancy", "mppi",  "navigation"};
  for (const auto& [key, value] : j.items()) {
    if (!sections.count(key)) throw ConfigError("unknown config section '" + key + "'");
  }
  GlobalConfig c;
  bind_all(c, &j, nullptr);
  propagate(c);
  c.validate();
  return c;
}

GlobalConfig load_config(const std::filesystem::path& path) { return parse_config(util::read_file(path)); }

std::string config_to_json(const GlobalConfig& config) {
  GlobalConfig c = config;
  json out = json::object();
  bind_all(c, nullptr, &out);
  return out.dump(2) + "\n";
}

}  // namespace psr::config
