// psr: data generation, training, evaluation, stability checks, benchmarks
// and closed-loop planning from one binary.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "psr/config/config.hpp"
#include "psr/errors.hpp"
#include "psr/model/batch_rollout.hpp"
#include "psr/plan/navigation.hpp"
#include "psr/plan/scene.hpp"
#include "psr/util/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace psr;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

config::GlobalConfig load_or_default(const std::string& path) {
  if (path.empty()) return {};
  return config::load_config(path);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw IoError("file not found: " + p.string());
}

json versioned(json body) {
  body["version"] = std::string(util::kVersion);
  return body;
}

void log(const std::string& msg) { std::cerr << msg << '\n'; }

// ---- svg ----

struct Series {
  std::string label;
  std::string color;
  std::vector<double> x, y;
};

std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                     const std::vector<Series>& series, bool log_y = false) {
  const double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  auto ty = [&](double v) { return log_y ? std::log10(std::max(v, 1e-12)) : v; };
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  }
  if (!log_y) y0 = std::min(y0, 0.0);
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<!-- psr " << util::kVersion << " -->\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel
     << "</text>\n";
  os << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
     << ")\" text-anchor=\"middle\" font-size=\"12\">" << ylabel << (log_y ? " (log10)" : "") << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4, fy = y0 + (y1 - y0) * k / 4;
    const double sx = L + (W - L - R) * k / 4, sy = H - B - (H - T - B) * k / 4;
    os << "<text x=\"" << sx << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
       << std::round(fx * 100) / 100 << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << sy + 3 << "\" text-anchor=\"end\" font-size=\"10\">"
       << std::round(fy * 1000) / 1000 << "</text>\n";
  }
  int row = 0;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << L + 10 << "\" y=\"" << T + 14 + 14 * row++ << "\" fill=\"" << s.color
       << "\" font-size=\"12\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---- gen-data ----

struct GenDataArgs {
  std::string config, out;
  double minutes = 0;
  std::uint64_t seed = 7;
};

int run_gen_data(const GenDataArgs& a) {
  auto cfg = load_or_default(a.config);
  if (a.minutes > 0) cfg.dataset.minutes = a.minutes;
  cfg.validate();
  const auto t0 = Clock::now();
  const auto data = data::generate_dataset(cfg.dataset, cfg.surrogate, a.seed);
  ensure_dir(a.out);
  data::write_dataset(fs::path(a.out) / "train.psrd", data.train);
  data::write_dataset(fs::path(a.out) / "test.psrd", data.test);
  json meta = versioned({{"seed", a.seed},
                         {"minutes", cfg.dataset.minutes},
                         {"trajectories", data.logs.size()},
                         {"train_windows", data.train.windows.size()},
                         {"test_windows", data.test.windows.size()},
                         {"history", cfg.dataset.H},
                         {"horizon", cfg.dataset.T}});
  util::write_file_atomic(fs::path(a.out) / "dataset.json", meta.dump(2) + "\n");
  log("gen-data: " + std::to_string(data.train.windows.size()) + " train / " +
      std::to_string(data.test.windows.size()) + " test windows in " + std::to_string(seconds_since(t0)) + " s");
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::string config, data, out, report;
  bool no_stab = false;
  std::optional<std::uint64_t> seed;
  int epochs = 0;
};

std::string train_report_csv(const train::TrainReport& r) {
  std::ostringstream os;
  os << util::csv_header_comment();
  os << "epoch,train_loss,test_loss,stab_loss,rho,selected\n";
  os.precision(8);
  for (const auto& e : r.epochs) {
    os << e.epoch << ',' << e.train_loss << ',' << e.test_loss << ',' << e.stab_loss << ',' << e.rho << ','
       << (e.epoch == r.best_epoch) << '\n';
  }
  return os.str();
}

int run_train(const TrainArgs& a) {
  auto cfg = load_or_default(a.config);
  if (a.no_stab) cfg.training.stability = false;
  if (a.seed) cfg.training.seed = *a.seed;
  if (a.epochs > 0) cfg.training.epochs = a.epochs;
  cfg.validate();
  const fs::path dir(a.data);
  require_file(dir / "train.psrd");
  require_file(dir / "test.psrd");
  const auto train_set = data::read_dataset(dir / "train.psrd");
  const auto test_set = data::read_dataset(dir / "test.psrd");

  const fs::path report = a.report.empty() ? fs::path(a.out + ".csv") : fs::path(a.report);
  train::TrainResult result;
  try {
    result = train::train(train_set, test_set, cfg.training, [](const train::EpochStats& e) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "epoch %3d  train %.5f  test %.5f  rho %.5f  %.1fs", e.epoch, e.train_loss,
                    e.test_loss, e.rho, e.seconds);
      log(buf);
    });
  } catch (const train::TrainingDiverged& e) {
    util::write_file_atomic(report, train_report_csv(e.report()));
    throw;
  }
  result.model.save(a.out);
  util::write_file_atomic(report, train_report_csv(result.report));
  log("train: selected epoch " + std::to_string(result.report.best_epoch) +
      (result.report.contractive ? " (contractive)" : " (not contractive)"));
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string config, data, checkpoint, out;
  bool svg = false;
};

int run_eval(const EvalArgs& a) {
  auto cfg = load_or_default(a.config);
  cfg.validate();
  require_file(a.checkpoint);
  const fs::path test_path = fs::path(a.data) / "test.psrd";
  require_file(test_path);
  const auto model = model::ModelParams::load(a.checkpoint);
  const auto test_set = data::read_dataset(test_path);
  const auto rep = train::evaluate(model, test_set, cfg.evaluation);
  ensure_dir(a.out);

  const double dt = cfg.surrogate.dt;
  std::ostringstream hz;
  hz << util::csv_header_comment() << "step,time,learned_mean,learned_std,cv_mean,cv_std\n";
  hz.precision(8);
  for (std::size_t t = 0; t < rep.learned.mean.size(); ++t) {
    hz << t + 1 << ',' << dt * static_cast<double>(t + 1) << ',' << rep.learned.mean[t] << ','
       << rep.learned.stddev[t] << ',' << rep.cv.mean[t] << ',' << rep.cv.stddev[t] << '\n';
  }
  util::write_file_atomic(fs::path(a.out) / "horizon_error.csv", hz.str());

  std::ostringstream ob;
  ob << util::csv_header_comment() << "step,median,mean\n";
  ob.precision(8);
  for (std::size_t k = 0; k < rep.observer.median.size(); ++k) {
    ob << k << ',' << rep.observer.median[k] << ',' << rep.observer.mean[k] << '\n';
  }
  util::write_file_atomic(fs::path(a.out) / "observer_error.csv", ob.str());

  const double learned_end = rep.learned.mean.back(), cv_end = rep.cv.mean.back();
  json summary = versioned({{"windows", rep.windows},
                            {"learned_final_error", learned_end},
                            {"cv_final_error", cv_end},
                            {"learned_over_cv", learned_end / cv_end},
                            {"observer_final_ratio", rep.observer.final_ratio()}});
  util::write_file_atomic(fs::path(a.out) / "summary.json", summary.dump(2) + "\n");

  if (a.svg) {
    Series l{"learned", "#1f77b4", {}, rep.learned.mean}, c{"constant velocity", "#d62728", {}, rep.cv.mean};
    for (std::size_t t = 0; t < rep.learned.mean.size(); ++t) {
      l.x.push_back(dt * static_cast<double>(t + 1));
      c.x.push_back(dt * static_cast<double>(t + 1));
    }
    util::write_file_atomic(fs::path(a.out) / "horizon_error.svg",
                            svg_plot("2D position error", "horizon [s]", "mean error [m]", {l, c}));
    Series o{"median", "#2ca02c", {}, rep.observer.median};
    for (std::size_t k = 0; k < rep.observer.median.size(); ++k) o.x.push_back(static_cast<double>(k));
    util::write_file_atomic(fs::path(a.out) / "observer_error.svg",
                            svg_plot("observer output error", "step", "||y - C_y x||", {o}, true));
  }
  std::cout << summary.dump(2) << '\n';
  return 0;
}

// ---- verify-stability ----

struct VerifyArgs {
  std::string config, checkpoint, out;
  std::optional<std::uint64_t> seed;
};

json report_json(const stability::StabilityReport& r) {
  json j = {{"rho", r.rho},           {"a_c_norm", r.a_c_norm}, {"lipschitz_g", r.lipschitz_g},
            {"c_y_norm", r.c_y_norm}, {"eps_max", r.eps_max},   {"bounded", r.bounded()}};
  j["state_bound"] = r.state_bound ? json(*r.state_bound) : json(nullptr);
  j["output_bound"] = r.output_bound ? json(*r.output_bound) : json(nullptr);
  return j;
}

int run_verify(const VerifyArgs& a) {
  auto cfg = load_or_default(a.config);
  if (a.seed) cfg.stability.seed = *a.seed;
  cfg.validate();
  require_file(a.checkpoint);
  const auto model = model::ModelParams::load(a.checkpoint);
  ensure_dir(a.out);
  const auto report = stability::stability_report(model.observer, cfg.stability.eps_max);
  if (!report.bounded()) {
    json j = versioned({{"report", report_json(report)}, {"status", "no_bound"}});
    util::write_file_atomic(fs::path(a.out) / "stability.json", j.dump(2) + "\n");
    throw NoBoundError("contraction factor " + std::to_string(report.rho) + " >= 1, no ultimate bound");
  }
  auto vcfg = cfg.stability;
  if (vcfg.trace_trials == 0) vcfg.trace_trials = std::min(vcfg.trials, 10);
  const auto v = stability::verify_uub(model.observer, vcfg);
  const bool ok = v.recursion_holds(vcfg.slack) && v.output_holds(vcfg.slack) && v.tail_within_bound();
  json j = versioned({{"report", report_json(v.report)},
                      {"status", ok ? "verified" : "violated"},
                      {"trials", vcfg.trials},
                      {"steps", vcfg.steps},
                      {"tail_sup", v.tail_sup},
                      {"max_recursion_excess", v.max_recursion_excess},
                      {"max_output_excess", v.max_output_excess},
                      {"diverged_trials", v.diverged_trials}});
  util::write_file_atomic(fs::path(a.out) / "stability.json", j.dump(2) + "\n");

  std::ostringstream tr;
  tr << util::csv_header_comment() << "trial,step,error_norm\n";
  tr.precision(8);
  for (std::size_t i = 0; i < v.traces.size(); ++i) {
    for (std::size_t k = 0; k < v.traces[i].size(); ++k) tr << i << ',' << k << ',' << v.traces[i][k] << '\n';
  }
  util::write_file_atomic(fs::path(a.out) / "traces.csv", tr.str());
  std::cout << j.dump(2) << '\n';
  return ok ? 0 : 1;
}

// ---- train-occupancy ----

struct OccArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed;
};

int run_train_occupancy(const OccArgs& a) {
  auto cfg = load_or_default(a.config);
  if (a.seed) cfg.occupancy_training.seed = *a.seed;
  cfg.validate();
  const std::uint64_t seed = cfg.occupancy_training.seed;
  auto samples = occupancy::sample_gait_configurations(cfg.occupancy_samples, seed, cfg.surrogate);
  const std::size_t n_test = samples.size() / 5;
  std::vector<occupancy::Joints> test(samples.end() - static_cast<std::ptrdiff_t>(n_test), samples.end());
  samples.resize(samples.size() - n_test);
  occupancy::OccupancyTrainReport rep;
  const auto model = occupancy::train_occupancy(samples, cfg.occupancy, cfg.occupancy_training, &rep,
                                                [](int epoch, double loss) {
                                                  if (epoch % 25 == 0) {
                                                    log("epoch " + std::to_string(epoch) +
                                                        "  mse " + std::to_string(loss));
                                                  }
                                                });
  model.save(a.out);
  const double err = occupancy::mean_point_error(model, test, cfg.occupancy);
  json j = versioned({{"train_samples", samples.size()},
                      {"test_samples", test.size()},
                      {"held_out_mean_point_error", err},
                      {"epochs", cfg.occupancy_training.epochs}});
  util::write_file_atomic(a.out + ".json", j.dump(2) + "\n");
  std::cout << j.dump(2) << '\n';
  return 0;
}

// ---- bench ----

struct BenchArgs {
  std::string config, checkpoint, scene = "narrow_passage", out;
  std::vector<int> samples{1, 10, 100, 1000};
  int horizon = 200;
  int threads = 1;
  int cycles = 5;
  std::uint64_t seed = 1;
};

int run_bench(const BenchArgs& a) {
  auto cfg = load_or_default(a.config);
  cfg.validate();
  nn::Rng rng(a.seed);
  model::ModelParams model;
  if (!a.checkpoint.empty()) {
    require_file(a.checkpoint);
    model = model::ModelParams::load(a.checkpoint);
  } else {
    model = model::ModelParams::init(cfg.training.dims, rng);
  }
  model::LatentState x{nn::Vec::Zero(model.latent())};
  std::uniform_real_distribution<double> cmd(-0.5, 0.5);

  std::ostringstream os;
  os << util::csv_header_comment() << "benchmark,precision,samples,horizon,threads,seconds,per_sample_us\n";
  os.precision(6);
  for (int n : a.samples) {
    model::CommandBatch batch(n, a.horizon);
    for (double& v : batch.data) v = cmd(rng);
    for (auto prec : {model::RolloutPrecision::kExact64, model::RolloutPrecision::kFast32}) {
      const int reps = std::max(1, 200 / n);
      const auto t0 = Clock::now();
      for (int r = 0; r < reps; ++r) model::batch_rollout(model.predictor, model.observer.C_y, x, batch, prec, a.threads);
      const double s = seconds_since(t0) / reps;
      os << "batch_rollout," << model::to_string(prec) << ',' << n << ',' << a.horizon << ',' << a.threads << ',' << s
         << ',' << 1e6 * s / n << '\n';
    }
  }

  const plan::Scene scene = fs::exists(a.scene) ? plan::load_scene(a.scene) : plan::scene_preset(a.scene);
  auto mcfg = cfg.navigation.mppi;
  mcfg.threads = a.threads;
  for (auto kind : {plan::PredictorKind::kLearned, plan::PredictorKind::kConstantVelocity}) {
    const auto occ = kind == plan::PredictorKind::kLearned ? plan::BodyOccupancy::oracle(cfg.occupancy)
                                                           : plan::BodyOccupancy::fixed(cfg.occupancy, cfg.surrogate);
    plan::MppiPlanner planner(mcfg, kind, &model, occ, scene.voxelize());
    std::vector<model::Command> nominal(static_cast<std::size_t>(mcfg.degree + 1), model::Command::Zero());
    FramePose pose;
    pose.p = Eigen::Vector3d(scene.start.x, scene.start.y, 0.0);
    pose.yaw = scene.start.yaw;
    double total = 0;
    for (int c = 0; c < a.cycles; ++c) {
      const auto r = planner.step(x, pose, nominal, scene.goal, rng);
      nominal = r.points;
      total += r.diagnostics.total_seconds;
    }
    const double s = total / a.cycles;
    os << "mppi_cycle," << plan::to_string(kind) << ',' << mcfg.samples << ',' << mcfg.horizon << ',' << a.threads
       << ',' << s << ',' << 1e6 * s / mcfg.samples << '\n';
  }
  if (a.out.empty()) {
    std::cout << os.str();
  } else {
    util::write_file_atomic(a.out, os.str());
  }
  return 0;
}

// ---- plan ----

struct PlanArgs {
  std::string config, scene = "open", checkpoint, occupancy, out, predictor = "learned";
  std::vector<double> goal;
  int seeds = 1;
  std::uint64_t first_seed = 1;
  bool oracle = false;
  bool static_body = false;
};

int run_plan(const PlanArgs& a) {
  auto cfg = load_or_default(a.config);
  cfg.validate();
  const plan::Scene scene = fs::exists(a.scene) ? plan::load_scene(a.scene) : plan::scene_preset(a.scene);
  plan::GoalPose goal = scene.goal;
  if (!a.goal.empty()) {
    if (a.goal.size() != 3) throw ConfigError("--goal takes x y yaw");
    goal = {a.goal[0], a.goal[1], a.goal[2]};
  }
  const auto kind = plan::parse_predictor(a.predictor);
  model::ModelParams model;
  if (kind == plan::PredictorKind::kLearned) {
    if (a.checkpoint.empty()) throw ConfigError("--checkpoint is required with the learned predictor");
    require_file(a.checkpoint);
    model = model::ModelParams::load(a.checkpoint);
  }

  plan::BodyOccupancy occ;
  if (a.oracle) {
    occ = plan::BodyOccupancy::oracle(cfg.occupancy);
  } else if (!a.occupancy.empty()) {
    require_file(a.occupancy);
    occ = plan::BodyOccupancy::from_model(occupancy::OccupancyModel::load(a.occupancy), cfg.occupancy);
  } else if (a.static_body || kind == plan::PredictorKind::kConstantVelocity) {
    occ = plan::BodyOccupancy::fixed(cfg.occupancy, cfg.surrogate);
  } else {
    throw ConfigError("learned predictor needs --occupancy, --oracle or --static-body");
  }

  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < a.seeds; ++i) seeds.push_back(a.first_seed + static_cast<std::uint64_t>(i));
  ensure_dir(a.out);
  std::vector<plan::TrialResult> trials;
  for (std::uint64_t s : seeds) {
    trials.push_back(plan::run_navigation_trial(scene, goal, kind, kind == plan::PredictorKind::kLearned ? &model : nullptr,
                                                occ, cfg.navigation, s));
    const auto& t = trials.back();
    log("seed " + std::to_string(s) + (t.success ? "  success" : t.collided ? "  collision" : "  timeout") +
        "  t=" + std::to_string(t.duration));
    util::write_file_atomic(fs::path(a.out) / ("trajectory_" + std::to_string(s) + ".csv"), plan::trajectory_csv(t));
  }
  util::write_file_atomic(fs::path(a.out) / "trials.csv", plan::trials_csv(trials));
  int ok = 0;
  for (const auto& t : trials) ok += t.success;
  json j = versioned({{"scene", scene.name},
                      {"predictor", plan::to_string(kind)},
                      {"trials", trials.size()},
                      {"successes", ok}});
  std::cout << j.dump(2) << '\n';
  return 0;
}

int exit_code(const Error& e) {
  const std::string k = e.kind();
  if (k == "config_error") return 2;
  if (k == "io_error") return 3;
  if (k == "format_error") return 4;
  if (k == "dimension_mismatch") return 5;
  if (k == "domain_error") return 6;
  if (k == "no_bound") return 7;
  if (k == "divergence") return 8;
  if (k == "infeasible_sampling") return 9;
  return 1;
}

void error_record(const std::string& kind, const std::string& message) {
  json j = versioned({{"error", kind}, {"message", message}});
  std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"psr: learned full-body prediction and sampling-based planning"};
  app.set_version_flag("--version", std::string(util::kVersion));
  app.require_subcommand(1);

  GenDataArgs gd;
  auto* c_gen = app.add_subcommand("gen-data", "Generate train/test window datasets from the surrogate robot");
  c_gen->add_option("--config", gd.config, "JSON config file (defaults when omitted)");
  c_gen->add_option("--minutes", gd.minutes, "Minutes of driving to record (overrides config)");
  c_gen->add_option("--seed", gd.seed, "Seed for plant randomization, commands and noise")->capture_default_str();
  c_gen->add_option("--out", gd.out, "Output directory for train.psrd, test.psrd, dataset.json")->required();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train the observer-predictor model");
  c_train->add_option("--config", tr.config, "JSON config file");
  c_train->add_option("--data", tr.data, "Directory holding train.psrd and test.psrd")->required();
  c_train->add_option("--out", tr.out, "Output checkpoint path")->required();
  c_train->add_option("--report", tr.report, "Per-epoch CSV report (default: <out>.csv)");
  c_train->add_flag("--no-stab", tr.no_stab, "Disable the stability regularizer (ablation)");
  c_train->add_option("--seed", tr.seed, "Training seed (overrides config)");
  c_train->add_option("--epochs", tr.epochs, "Number of epochs (overrides config)");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Horizon error curves against the constant-velocity baseline");
  c_eval->add_option("--config", ev.config, "JSON config file");
  c_eval->add_option("--data", ev.data, "Directory holding test.psrd")->required();
  c_eval->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required();
  c_eval->add_option("--out", ev.out, "Output directory for CSV (and SVG) files")->required();
  c_eval->add_flag("--svg", ev.svg, "Also write SVG plots");

  VerifyArgs vs;
  auto* c_verify = app.add_subcommand("verify-stability", "Contraction factor, ultimate bounds and simulated error traces");
  c_verify->add_option("--config", vs.config, "JSON config file");
  c_verify->add_option("--checkpoint", vs.checkpoint, "Model checkpoint")->required();
  c_verify->add_option("--out", vs.out, "Output directory for stability.json and traces.csv")->required();
  c_verify->add_option("--seed", vs.seed, "Simulation seed (overrides config)");

  OccArgs oc;
  auto* c_occ = app.add_subcommand("train-occupancy", "Fit the occupancy network to the kinematic point sets");
  c_occ->add_option("--config", oc.config, "JSON config file");
  c_occ->add_option("--out", oc.out, "Output checkpoint path")->required();
  c_occ->add_option("--seed", oc.seed, "Sampling and training seed (overrides config)");

  BenchArgs bn;
  auto* c_bench = app.add_subcommand("bench", "Time batched rollouts and full planning cycles");
  c_bench->add_option("--config", bn.config, "JSON config file");
  c_bench->add_option("--checkpoint", bn.checkpoint, "Model checkpoint (random weights when omitted)");
  c_bench->add_option("--scene", bn.scene, "Scene preset name or JSON file")->capture_default_str();
  c_bench->add_option("--samples", bn.samples, "Batch sizes to time")->capture_default_str();
  c_bench->add_option("--horizon", bn.horizon, "Rollout horizon")->capture_default_str();
  c_bench->add_option("--threads", bn.threads, "Worker threads (0: all cores)")->capture_default_str();
  c_bench->add_option("--cycles", bn.cycles, "Planning cycles to average")->capture_default_str();
  c_bench->add_option("--seed", bn.seed, "Seed for commands and sampling")->capture_default_str();
  c_bench->add_option("--out", bn.out, "CSV output path (stdout when omitted)");

  PlanArgs pl;
  auto* c_plan = app.add_subcommand("plan", "Closed-loop navigation trials");
  c_plan->add_option("--config", pl.config, "JSON config file");
  c_plan->add_option("--scene", pl.scene, "Scene preset (open, narrow_passage, clutter) or JSON file")
      ->capture_default_str();
  c_plan->add_option("--goal", pl.goal, "Goal pose x y yaw (default: the scene's goal)")->expected(3);
  c_plan->add_option("--predictor", pl.predictor, "learned or cv")->capture_default_str();
  c_plan->add_option("--checkpoint", pl.checkpoint, "Model checkpoint (learned predictor)");
  c_plan->add_option("--occupancy", pl.occupancy, "Occupancy network checkpoint");
  c_plan->add_flag("--oracle", pl.oracle, "Use the kinematic occupancy oracle instead of the network");
  c_plan->add_flag("--static-body", pl.static_body, "Use the fixed nominal-stance point set");
  c_plan->add_option("--seeds", pl.seeds, "Number of trials")->capture_default_str();
  c_plan->add_option("--first-seed", pl.first_seed, "Seed of the first trial")->capture_default_str();
  c_plan->add_option("--out", pl.out, "Output directory for trials.csv and trajectory CSVs")->required();

  std::string cfg_path;
  auto* c_cfg = app.add_subcommand("dump-config", "Print the effective config (defaults when no file) as JSON");
  c_cfg->add_option("--config", cfg_path, "JSON config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    error_record("usage_error", e.what());
    return 2;
  }

  try {
    if (*c_gen) return run_gen_data(gd);
    if (*c_train) return run_train(tr);
    if (*c_eval) return run_eval(ev);
    if (*c_verify) return run_verify(vs);
    if (*c_occ) return run_train_occupancy(oc);
    if (*c_bench) return run_bench(bn);
    if (*c_plan) return run_plan(pl);
    if (*c_cfg) {
      std::cout << config::config_to_json(load_or_default(cfg_path)) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    error_record(e.kind(), e.what());
    return exit_code(e);
  } catch (const std::exception& e) {
    error_record("error", e.what());
    return 1;
  }
  return 1;
}
