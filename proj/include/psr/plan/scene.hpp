#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "psr/geometry.hpp"
#include "psr/plan/voxel_map.hpp"

namespace psr::plan {

/// Target pose (x m, y m, yaw rad).
using GoalPose = PlanarPose;

struct Scene {
  std::string name;
  double resolution = 0.1;
  std::vector<Box> boxes;
  PlanarPose start;
  GoalPose goal;

  VoxelMap voxelize() const;
  void validate() const;
};

/// Named presets: "open", "narrow_passage", "clutter". Throws ConfigError
/// for an unknown name.
Scene scene_preset(const std::string& name);
std::vector<std::string> scene_preset_names();

/// Scene file (JSON):
///   {"name": str, "resolution": m, "start": [x, y, yaw], "goal": [x, y, yaw],
///    "boxes": [{"min": [x, y, z], "max": [x, y, z]}, ...]}
/// Unknown keys are rejected.
Scene load_scene(const std::filesystem::path& path);
Scene parse_scene(const std::string& json_text);
std::string scene_to_json(const Scene& scene);

}  // namespace psr::plan
