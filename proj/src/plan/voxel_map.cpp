#include "psr/plan/voxel_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "psr/errors.hpp"

namespace psr::plan {

void Box::validate() const {
  if (!((max - min).minCoeff() > 0.0)) throw DomainError("box must have positive extent along every axis");
}

bool Box::contains(const Eigen::Vector3d& p) const {
  return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
}

namespace {

// Clearance is tabulated this far (in metres) beyond the occupied footprint.
constexpr double kFieldMargin = 2.0;

}  // namespace

VoxelMap::VoxelMap(double resolution, std::vector<VoxelIndex> voxels)
    : resolution_(resolution), inv_resolution_(1.0 / resolution), voxels_(std::move(voxels)) {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) throw DomainError("voxel resolution must be positive");
  std::sort(voxels_.begin(), voxels_.end());
  voxels_.erase(std::unique(voxels_.begin(), voxels_.end()), voxels_.end());
  if (voxels_.empty()) return;

  VoxelIndex hi = voxels_.front();
  lo_ = voxels_.front();
  for (const VoxelIndex& v : voxels_) {
    lo_ = {std::min(lo_.x, v.x), std::min(lo_.y, v.y), std::min(lo_.z, v.z)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
  }
  dims_ = {hi.x - lo_.x + 1, hi.y - lo_.y + 1, hi.z - lo_.z + 1};
  const std::size_t cells = static_cast<std::size_t>(dims_.x) * dims_.y * dims_.z;
  bits_.assign((cells + 63) / 64, 0);
  std::vector<char> column(static_cast<std::size_t>(dims_.x) * dims_.y, 0);
  for (const VoxelIndex& v : voxels_) {
    const std::size_t c = static_cast<std::size_t>(v.x - lo_.x) * dims_.y + (v.y - lo_.y);
    const std::size_t i = c * dims_.z + (v.z - lo_.z);
    bits_[i / 64] |= std::uint64_t{1} << (i % 64);
    column[c] = 1;
  }

  // Brute-force horizontal distance transform. Only columns on the
  // footprint boundary can be nearest to a free cell.
  const auto col_at = [&](int i, int j) {
    return i >= 0 && j >= 0 && i < dims_.x && j < dims_.y && column[static_cast<std::size_t>(i) * dims_.y + j];
  };
  std::vector<std::pair<int, int>> occ;
  for (int i = 0; i < dims_.x; ++i) {
    for (int j = 0; j < dims_.y; ++j) {
      if (col_at(i, j) && !(col_at(i - 1, j) && col_at(i + 1, j) && col_at(i, j - 1) && col_at(i, j + 1))) {
        occ.emplace_back(i, j);
      }
    }
  }
  field_margin_ = static_cast<int>(std::ceil(kFieldMargin * inv_resolution_));
  field_lo_ = {lo_.x - field_margin_, lo_.y - field_margin_, 0};
  field_dims_ = {dims_.x + 2 * field_margin_, dims_.y + 2 * field_margin_, 1};
  field_.assign(static_cast<std::size_t>(field_dims_.x) * field_dims_.y, std::numeric_limits<float>::infinity());
  for (int i = 0; i < field_dims_.x; ++i) {
    for (int j = 0; j < field_dims_.y; ++j) {
      const int ci = i - field_margin_, cj = j - field_margin_;
      if (col_at(ci, cj)) {
        field_[static_cast<std::size_t>(i) * field_dims_.y + j] = 0.0f;
        continue;
      }
      int best = std::numeric_limits<int>::max();
      for (const auto& [oi, oj] : occ) {
        const int dx = std::max(std::abs(ci - oi) - 1, 0);
        const int dy = std::max(std::abs(cj - oj) - 1, 0);
        best = std::min(best, dx * dx + dy * dy);
      }
      field_[static_cast<std::size_t>(i) * field_dims_.y + j] = static_cast<float>(std::sqrt(best) * resolution_);
    }
  }
}

VoxelMap VoxelMap::from_boxes(std::span<const Box> boxes, double resolution) {
  if (!(resolution > 0.0)) throw DomainError("voxel resolution must be positive");
  std::vector<VoxelIndex> v;
  for (const Box& b : boxes) {
    b.validate();
    const Eigen::Vector3d lo = b.min / resolution;
    const Eigen::Vector3d hi = b.max / resolution;
    // Tolerate rounding when a face sits on a grid plane.
    const auto first = [](double x) { return static_cast<int>(std::floor(x + 1e-9)); };
    const auto last = [](double x) { return static_cast<int>(std::ceil(x - 1e-9)) - 1; };
    for (int i = first(lo.x()); i <= last(hi.x()); ++i) {
      for (int j = first(lo.y()); j <= last(hi.y()); ++j) {
        for (int k = first(lo.z()); k <= last(hi.z()); ++k) v.push_back({i, j, k});
      }
    }
  }
  return VoxelMap(resolution, std::move(v));
}

VoxelIndex VoxelMap::index_of(const Eigen::Vector3d& p) const {
  return {static_cast<int>(std::floor(p.x() * inv_resolution_)), static_cast<int>(std::floor(p.y() * inv_resolution_)),
          static_cast<int>(std::floor(p.z() * inv_resolution_))};
}

bool VoxelMap::contains(const VoxelIndex& v) const {
  if (bits_.empty()) return false;
  const int i = v.x - lo_.x, j = v.y - lo_.y, k = v.z - lo_.z;
  if (i < 0 || j < 0 || k < 0 || i >= dims_.x || j >= dims_.y || k >= dims_.z) return false;
  const std::size_t idx = (static_cast<std::size_t>(i) * dims_.y + j) * dims_.z + k;
  return (bits_[idx / 64] >> (idx % 64)) & 1u;
}

bool VoxelMap::occupied(double x, double y, double z) const {
  if (bits_.empty()) return false;
  return contains({static_cast<int>(std::floor(x * inv_resolution_)), static_cast<int>(std::floor(y * inv_resolution_)),
                   static_cast<int>(std::floor(z * inv_resolution_))});
}

double VoxelMap::clearance(double x, double y) const {
  if (field_.empty()) return std::numeric_limits<double>::infinity();
  const int i = static_cast<int>(std::floor(x * inv_resolution_)) - field_lo_.x;
  const int j = static_cast<int>(std::floor(y * inv_resolution_)) - field_lo_.y;
  if (i < 0 || j < 0 || i >= field_dims_.x || j >= field_dims_.y) {
    // Outside the tabulated field the distance is at least the margin.
    return static_cast<double>(field_margin_) * resolution_;
  }
  return field_[static_cast<std::size_t>(i) * field_dims_.y + j];
}

}  // namespace psr::plan
