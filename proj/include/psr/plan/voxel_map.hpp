#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace psr::plan {

struct VoxelIndex {
  int x = 0, y = 0, z = 0;
  auto operator<=>(const VoxelIndex&) const = default;
};

/// Axis-aligned box [min, max] in metres.
struct Box {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  /// Throws DomainError unless every extent is positive.
  void validate() const;
  bool contains(const Eigen::Vector3d& p) const;
};

/// Immutable set of occupied voxels. Voxel (i, j, k) covers
/// [i r, (i+1) r) x [j r, (j+1) r) x [k r, (k+1) r), so each point falls in
/// exactly one voxel. Queries go through a dense bit grid over the occupied
/// bounding box.
class VoxelMap {
 public:
  explicit VoxelMap(double resolution = 0.1, std::vector<VoxelIndex> voxels = {});

  /// Every voxel that overlaps a box with positive volume.
  static VoxelMap from_boxes(std::span<const Box> boxes, double resolution);

  double resolution() const { return resolution_; }
  std::size_t size() const { return voxels_.size(); }
  bool empty() const { return voxels_.empty(); }
  /// Sorted, duplicate-free.
  const std::vector<VoxelIndex>& voxels() const { return voxels_; }

  VoxelIndex index_of(const Eigen::Vector3d& p) const;
  bool contains(const VoxelIndex& v) const;
  bool occupied(double x, double y, double z) const;
  bool occupied(const Eigen::Vector3d& p) const { return occupied(p.x(), p.y(), p.z()); }

  /// Lower bound on the horizontal distance from (x, y) to any occupied
  /// voxel (0 inside an occupied column, +inf for an empty map). Exact to
  /// within one voxel diagonal.
  double clearance(double x, double y) const;

 private:
  double resolution_;
  double inv_resolution_;
  std::vector<VoxelIndex> voxels_;
  VoxelIndex lo_{}, dims_{};
  std::vector<std::uint64_t> bits_;
  // Horizontal clearance field over the occupied footprint plus a margin.
  int field_margin_ = 0;
  VoxelIndex field_lo_{}, field_dims_{};
  std::vector<float> field_;
};

}  // namespace psr::plan
