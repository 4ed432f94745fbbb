#pragma once

#include <filesystem>
#include <string>

#include "psr/data/dataset.hpp"
#include "psr/occupancy/occupancy.hpp"
#include "psr/plan/navigation.hpp"
#include "psr/stability/stability.hpp"
#include "psr/train/evaluate.hpp"
#include "psr/train/trainer.hpp"

namespace psr::config {

/// Every tunable constant of the pipeline. Sections and keys mirror the
/// member names below; see config_to_json for the full default document.
struct GlobalConfig {
  sim::SurrogateConfig surrogate;
  data::DatasetConfig dataset;
  train::TrainConfig training;  // includes the model dimensions
  train::EvaluationConfig evaluation;
  stability::UubVerificationConfig stability;
  occupancy::OccupancyConfig occupancy;
  occupancy::OccupancyTrainConfig occupancy_training;
  int occupancy_samples = 4000;
  plan::NavigationConfig navigation;  // includes the MPPI constants

  void validate() const;
};

/// Parses a JSON document; absent keys keep their defaults, unknown keys and
/// ill-typed values raise ConfigError.
GlobalConfig parse_config(const std::string& json_text);
GlobalConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const GlobalConfig& config);

}  // namespace psr::config
