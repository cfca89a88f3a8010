#pragma once

#include <cstdint>
#include <string>

#include "lppo/environment.hpp"
#include "lppo/plant.hpp"
#include "lppo/scenario.hpp"
#include "lppo/sysid.hpp"
#include "lppo/trainer.hpp"

namespace lppo::config {

/// Flat run configuration; every key has a documented default and is
/// overridable from a `key = value` text file with '#' comments.
/// Unknown keys are rejected.
struct RunConfig {
  // scenarios / environment
  uint64_t seed = 12345;
  int horizon = 300;  // key: T
  int n_train = 1200;
  int n_val = 10;
  int n_test = 30;
  double action_min = 0.4;
  double action_max = 1.05;
  env::DemandParams demand;
  env::ScheduleParams schedule;

  // system identification
  int rom_degree = 1;
  double rom_threshold = 0.02;
  int rom_subsample = 5;
  double rom_holdout = 0.1;
  int rom_max_iters = 20;
  double dt_record = 5.0;
  int n_sysid_trajectories = 40;
  double sysid_dither = 0.0;   // optional setpoint probing amplitude during data generation

  // training
  train::TrainConfig trainer;

  // reference plant
  plant::PlantConfig plant;

  /// Canonical serialization: every key in registry order, g17 values.
  std::string resolved_text() const;
  uint64_t hash() const;  // FNV-1a over resolved_text()

  train::TrainConfig train_config() const;
  env::EnvParams env_params() const;
  sysid::IdentifyOptions identify_options() const;

  void validate() const;
};

/// Parse `key = value` lines; throws std::invalid_argument on missing
/// file, unknown keys (all listed), malformed values, or violated
/// invariants.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

uint64_t fnv1a64(const std::string& text);

}  // namespace lppo::config
