#include "psr/plan/scene.hpp"

#include <json.hpp>

#include "psr/errors.hpp"
#include "psr/util/io.hpp"

namespace psr::plan {

using nlohmann::json;

VoxelMap Scene::voxelize() const {
  validate();
  return VoxelMap::from_boxes(boxes, resolution);
}

void Scene::validate() const {
  if (!(resolution > 0.0)) throw ConfigError("scene resolution must be positive");
  for (const Box& b : boxes) {
    if (!((b.max - b.min).minCoeff() > 0.0)) throw ConfigError("scene boxes must have positive volume");
  }
}

Scene scene_preset(const std::string& name) {
  Scene s;
  s.name = name;
  if (name == "open") {
    s.resolution = 0.1;
    s.goal = {5.0, 2.5, 1.57};
    return s;
  }
  if (name == "narrow_passage") {
    // A 3 m corridor of width body + 0.10 m, with walls that cannot be walked
    // around in the episode time. Faces sit on grid planes.
    s.resolution = 0.05;
    const double gap_lo = -0.20, gap_hi = 0.25;
    s.boxes.push_back({{1.5, gap_hi, 0.0}, {4.5, 4.0, 0.6}});
    s.boxes.push_back({{1.5, -4.0, 0.0}, {4.5, gap_lo, 0.6}});
    const double mid = 0.5 * (gap_lo + gap_hi);
    s.start = {0.0, mid, 0.0};
    s.goal = {6.0, mid, 0.0};
    return s;
  }
  if (name == "clutter") {
    s.resolution = 0.05;
    s.boxes.push_back({{1.0, -0.60, 0.0}, {1.4, -0.10, 0.15}});
    s.boxes.push_back({{2.2, 0.20, 0.0}, {2.6, 0.80, 0.15}});
    s.boxes.push_back({{3.2, -0.40, 0.0}, {3.6, 0.20, 0.15}});
    s.goal = {4.5, 0.0, 0.0};
    return s;
  }
  throw ConfigError("unknown scene preset '" + name + "'");
}

std::vector<std::string> scene_preset_names() { return {"open", "narrow_passage", "clutter"}; }

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

Eigen::Vector3d vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(what + " must be an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

Scene parse_scene(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scene JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("scene JSON must be an object");
  reject_unknown(j, {"name", "resolution", "start", "goal", "boxes"}, "scene");
  Scene s;
  try {
    s.name = j.value("name", std::string("custom"));
    s.resolution = j.value("resolution", 0.1);
    if (j.contains("start")) {
      const auto v = vec3(j["start"], "start");
      s.start = {v.x(), v.y(), v.z()};
    }
    if (j.contains("goal")) {
      const auto v = vec3(j["goal"], "goal");
      s.goal = {v.x(), v.y(), v.z()};
    }
    if (j.contains("boxes")) {
      for (const json& b : j["boxes"]) {
        reject_unknown(b, {"min", "max"}, "scene box");
        s.boxes.push_back({vec3(b.at("min"), "box min"), vec3(b.at("max"), "box max")});
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scene JSON: ") + e.what());
  }
  s.validate();
  return s;
}

Scene load_scene(const std::filesystem::path& path) { return parse_scene(util::read_file(path)); }

std::string scene_to_json(const Scene& s) {
  json j;
  j["name"] = s.name;
  j["resolution"] = s.resolution;
  j["start"] = {s.start.x, s.start.y, s.start.yaw};
  j["goal"] = {s.goal.x, s.goal.y, s.goal.yaw};
  j["boxes"] = json::array();
  for (const Box& b : s.boxes) {
    j["boxes"].push_back({{"min", {b.min.x(), b.min.y(), b.min.z()}}, {"max", {b.max.x(), b.max.y(), b.max.z()}}});
  }
  return j.dump(2) + "\n";
}

}  // namespace psr::plan
