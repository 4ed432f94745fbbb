#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "psr/nn/mlp.hpp"
#include "psr/sim/surrogate.hpp"

namespace psr::occupancy {

using Joints = std::array<double, 12>;
/// Points in the base frame, one per column.
using PointSet = Eigen::Matrix3Xd;

/// Sampling pattern of the occupancy set. The body box contributes the
/// cell centres of a grid on each face (nx*ny on top and bottom, ny*nz on
/// front and back, nx*nz on the sides); every leg link contributes
/// `points_per_link` points spaced along its axis, ending at the distal
/// joint. The defaults give 500 + 8 * 35 = 780 points.
struct OccupancyConfig {
  sim::BodyGeometry geometry;
  std::array<int, 3> body_grid{16, 7, 6};
  int points_per_link = 35;

  int body_points() const;
  int point_count() const;
  void validate() const;
};

/// Hip, knee and foot of leg `leg` (order FL, FR, HL, HR) in the base frame.
struct LegChain {
  Eigen::Vector3d hip, knee, foot;
};
LegChain leg_chain(const sim::BodyGeometry& geometry, int leg, double abduction, double hip, double knee);

/// Deterministic forward-kinematics occupancy oracle; fixed point order:
/// body faces (top, bottom, front, back, left, right), then legs FL, FR, HL,
/// HR with the upper link before the lower one.
PointSet fk_occupancy(const Joints& joints, const OccupancyConfig& config = {});

/// Radius of a ball around the base origin that contains every occupancy
/// point for any joint configuration.
double bounding_radius(const OccupancyConfig& config = {});

/// Learned occupancy model h: 12 joint angles -> 3M coordinates, laid out
/// point by point (x0, y0, z0, x1, ...).
struct OccupancyModel {
  nn::MlpParams h;

  int point_count() const { return static_cast<int>(h.output_dim() / 3); }
  PointSet evaluate(const Joints& joints) const;
  /// Column-batched evaluation: each column of `joints` is a configuration;
  /// returns 3M x N.
  Eigen::MatrixXd evaluate_batch(const Eigen::MatrixXd& joints) const;

  void save(const std::filesystem::path& path) const;
  static OccupancyModel load(const std::filesystem::path& path);
};

/// Joint configurations visited by the surrogate under random command
/// profiles, sampled every `stride` steps.
std::vector<Joints> sample_gait_configurations(int count, std::uint64_t seed, const sim::SurrogateConfig& plant = {},
                                               int stride = 5);

struct OccupancyTrainConfig {
  std::vector<Eigen::Index> hidden{64, 128};
  int epochs = 300;
  int batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

struct OccupancyTrainReport {
  std::vector<double> epoch_loss;  // mean squared coordinate error per epoch
  double seconds = 0.0;
};

/// Fits h to (theta, fk_occupancy(theta)) pairs with Adam. The output bias
/// starts at the mean target so training begins from the average shape.
OccupancyModel train_occupancy(const std::vector<Joints>& samples, const OccupancyConfig& config,
                               const OccupancyTrainConfig& train_config, OccupancyTrainReport* report = nullptr,
                               const std::function<void(int, double)>& on_epoch = {});

/// Mean Euclidean distance between corresponding points of h(theta) and
/// fk_occupancy(theta), averaged over points and samples.
double mean_point_error(const OccupancyModel& model, const std::vector<Joints>& samples,
                        const OccupancyConfig& config = {});

/// CSV: one row per point (index, x, y, z).
std::string point_set_csv(const PointSet& points);

}  // namespace psr::occupancy
