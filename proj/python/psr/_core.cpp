#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "psr/config/config.hpp"
#include "psr/data/bezier.hpp"
#include "psr/errors.hpp"
#include "psr/model/cv_baseline.hpp"
#include "psr/model/observer_predictor.hpp"
#include "psr/nn/mlp.hpp"
#include "psr/occupancy/occupancy.hpp"
#include "psr/plan/costs.hpp"
#include "psr/plan/navigation.hpp"
#include "psr/sim/surrogate.hpp"
#include "psr/stability/stability.hpp"

namespace py = pybind11;
using namespace psr;
using model::Command;
using RowsX3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

namespace {

std::vector<Command> to_commands(const RowsX3& m) {
  std::vector<Command> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m.row(i).transpose();
  return out;
}

occupancy::Joints to_joints(const Eigen::VectorXd& v) {
  nn::require_dims(v.size(), 12, "joint vector");
  occupancy::Joints j{};
  for (int k = 0; k < 12; ++k) j[static_cast<std::size_t>(k)] = v[k];
  return j;
}

FullBodyConfig to_config(const Eigen::VectorXd& v) {
  nn::require_dims(v.size(), model::kConfigDim, "full-body configuration");
  return FullBodyConfig::from_vector(v);
}

// (T+1) x 18 configurations and T x 14 measurements under a command sequence.
py::tuple simulate(const RowsX3& commands, std::uint64_t seed, const std::string& config_json) {
  const auto cfg = config_json.empty() ? config::GlobalConfig{} : config::parse_config(config_json);
  sim::SurrogateRobot robot(cfg.surrogate, seed);
  const auto us = to_commands(commands);
  nn::Mat z(static_cast<Eigen::Index>(us.size()) + 1, model::kConfigDim);
  nn::Mat y(static_cast<Eigen::Index>(us.size()), model::kMeasuredDim);
  for (std::size_t t = 0; t < us.size(); ++t) {
    z.row(static_cast<Eigen::Index>(t)) = robot.config_space().to_vector().transpose();
    y.row(static_cast<Eigen::Index>(t)) = robot.measure().transpose();
    robot.apply(us[t]);
  }
  z.row(z.rows() - 1) = robot.config_space().to_vector().transpose();
  return py::make_tuple(z, y);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  using namespace pybind11::literals;
  m.doc() = "Stable observer-predictor and MPPI planner.";
  m.attr("__version__") = "0.1.0";

  // Library errors surface as the matching Python built-ins.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const IoError& e) {
      PyErr_SetString(PyExc_OSError, e.what());
    } catch (const DimensionError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const ConfigError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const DomainError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const Error& e) {
      PyErr_SetString(PyExc_RuntimeError, e.what());
    }
  });

  m.def("default_config", [] { return config::config_to_json(config::GlobalConfig{}); },
        "Default configuration as a JSON string.");

  m.def("simulate", &simulate, "commands"_a, "seed"_a = 1, "config_json"_a = "",
        "Run the surrogate plant; returns (configs (T+1)x18, measurements Tx14).");

  m.def("nominal_joints", [] { return sim::nominal_joints({}); });

  m.def(
      "bezier_eval",
      [](const RowsX3& points, double s) -> Eigen::Vector3d {
        return data::bezier_point(to_commands(points), s);
      },
      "points"_a, "s"_a);

  m.def(
      "cv_rollout",
      [](const Eigen::Vector3d& start, const RowsX3& commands, double dt) {
        const auto poses = model::cv_rollout({start[0], start[1], start[2]}, to_commands(commands), dt);
        RowsX3 out(static_cast<Eigen::Index>(poses.size()), 3);
        for (std::size_t t = 0; t < poses.size(); ++t) {
          out.row(static_cast<Eigen::Index>(t)) << poses[t].x, poses[t].y, poses[t].yaw;
        }
        return out;
      },
      "start"_a, "commands"_a, "dt"_a = 0.02, "Constant-velocity baseline poses (x, y, yaw) per step.");

  m.def(
      "spectral_norm", [](const nn::Mat& a, int iters, double tol) { return nn::spectral_norm(a, {iters, tol}); },
      "matrix"_a, "iters"_a = 1000, "tol"_a = 1e-12);

  m.def(
      "lipschitz_upper_bound",
      [](const std::vector<nn::Mat>& weights, const std::vector<Eigen::VectorXd>& biases) {
        nn::MlpParams p{weights, biases};
        p.validate();
        return nn::lipschitz_upper_bound(p, {1000, 1e-12});
      },
      "weights"_a, "biases"_a, "Product of the layer spectral norms of a ReLU MLP.");

  m.def(
      "mppi_weights",
      [](const std::vector<double>& costs, double temperature) { return plan::mppi_weights(costs, temperature); },
      "costs"_a, "temperature"_a = 1.0);

  m.def(
      "fk_occupancy", [](const Eigen::VectorXd& joints) -> Eigen::Matrix3Xd { return occupancy::fk_occupancy(to_joints(joints)); },
      "joints"_a, "Body occupancy points (3 x M) in the base frame.");

  m.def(
      "collision_cost",
      [](const Eigen::VectorXd& config, const std::vector<std::pair<Eigen::Vector3d, Eigen::Vector3d>>& boxes,
         double resolution) {
        std::vector<plan::Box> bs;
        for (const auto& [lo, hi] : boxes) bs.push_back({lo, hi});
        const auto z = to_config(config);
        return plan::collision_cost(z, plan::VoxelMap::from_boxes(bs, resolution), occupancy::fk_occupancy(z.joints));
      },
      "config"_a, "boxes"_a, "resolution"_a = 0.05, "Occupancy points of `config` inside the voxelized boxes.");

  py::class_<model::ModelParams>(m, "Model")
      .def_property_readonly("latent", &model::ModelParams::latent)
      .def("save", [](const model::ModelParams& p, const std::string& path) { p.save(path); })
      .def(
          "observe",
          [](const model::ModelParams& p, const nn::Mat& ys, const RowsX3& us, std::optional<Eigen::VectorXd> x0) {
            std::vector<nn::Vec> y;
            for (Eigen::Index i = 0; i < ys.rows(); ++i) y.push_back(ys.row(i).transpose());
            model::LatentState x{x0 ? *x0 : nn::Vec::Zero(p.latent())};
            return model::observer_unroll(p.observer, x, y, to_commands(us)).x;
          },
          "measurements"_a, "commands"_a, "x0"_a = py::none(), "Run the observer over a history; returns the latent.")
      .def(
          "predict",
          [](const model::ModelParams& p, const Eigen::VectorXd& x, const RowsX3& us) {
            return model::predict(p.predictor, p.observer.C_y, {x}, to_commands(us));
          },
          "x"_a, "commands"_a, "Robocentric T x 18 predictions from a latent state.");

  m.def(
      "load_model", [](const std::string& path) { return model::ModelParams::load(path); }, "path"_a);

  m.def(
      "random_model",
      [](int latent, std::vector<Eigen::Index> hidden, std::uint64_t seed) {
        nn::Rng rng(seed);
        return model::ModelParams::init({latent, std::move(hidden)}, rng);
      },
      "latent"_a = 16, "hidden"_a = std::vector<Eigen::Index>{16}, "seed"_a = 1);

  m.def(
      "contraction_factor",
      [](const model::ModelParams& p) { return stability::contraction_factor(p.observer, {5000, 1e-12}); },
      "model"_a, "rho = ||A - K C_y|| + Lipschitz bound of g; below 1 the estimation error is bounded.");

  m.def(
      "plan_trial",
      [](const std::string& scene, std::uint64_t seed, int samples, int horizon, const model::ModelParams* model) {
        const auto sc = plan::scene_preset(scene);
        plan::NavigationConfig cfg;
        cfg.mppi.samples = samples;
        cfg.mppi.horizon = horizon;
        cfg.mppi.collision_stride = 5;
        cfg.record_trajectory = false;
        const auto kind = model ? plan::PredictorKind::kLearned : plan::PredictorKind::kConstantVelocity;
        const auto r = plan::run_navigation_trial(sc, sc.goal, kind, model, plan::BodyOccupancy::fixed(), cfg, seed);
        py::dict d;
        d["success"] = r.success;
        d["collided"] = r.collided;
        d["timed_out"] = r.timed_out;
        d["time_to_track"] = r.time_to_track;
        d["final_position_error"] = r.final_position_error;
        d["final_yaw_error"] = r.final_yaw_error;
        d["planning_cycles"] = r.planning_cycles;
        return d;
      },
      "scene"_a = "open", "seed"_a = 1, "samples"_a = 128, "horizon"_a = 100, "model"_a = nullptr,
      "One closed-loop episode; the CV predictor when no model is given.");
}
