#pragma once

#include <Eigen/Dense>

#include "lppo/environment.hpp"
#include "lppo/romstate.hpp"
#include "lppo/scenario.hpp"
#include "lppo/sysid.hpp"

namespace testing_helpers {

/// Hand-built ROM realizing x_{t+1} = x_t (states frozen at reset).
inline lppo::sysid::RomModel identity_rom() {
  using namespace lppo;
  sysid::RomModel rom;
  rom.library = sysid::FeatureLibrary::make(1, true, rom_state_names(), {"setpoint"});
  rom.state_names = rom_state_names();
  rom.dt_rom = 25.0;
  const int f = rom.library.feature_count();
  rom.feature_mean = Eigen::VectorXd::Zero(f);
  rom.feature_scale = Eigen::VectorXd::Ones(f);
  rom.target_mean = Eigen::VectorXd::Zero(kRomStateDim);
  rom.target_scale = Eigen::VectorXd::Ones(kRomStateDim);
  rom.coeffs = Eigen::MatrixXd::Zero(f, kRomStateDim);
  for (int s = 0; s < kRomStateDim; ++s) rom.coeffs(1 + s, s) = 1.0;
  rom.sparsity_threshold = 0.02;
  return rom;
}

/// Identity ROM except the HX inlet temperature tracks the action:
/// t_in_next = 0.3*a - 0.1 (0.2 at full power, dropping linearly).
inline lppo::sysid::RomModel action_coupled_rom() {
  using namespace lppo;
  sysid::RomModel rom = identity_rom();
  const int a_col = rom.library.feature_count() - 1;
  rom.coeffs.col(kIdxTHxSIn).setZero();
  rom.coeffs(0, kIdxTHxSIn) = -0.1;
  rom.coeffs(a_col, kIdxTHxSIn) = 0.3;
  return rom;
}

inline lppo::env::Scenario constant_scenario(int horizon, double demand = 1.0,
                                             double c_in_min = 0.15,
                                             double c_out_max = 0.72, uint64_t seed = 1) {
  lppo::env::Scenario s;
  s.seed = seed;
  s.horizon = horizon;
  s.split_tag = "train";
  s.demand.assign(horizon, demand);
  s.demand[0] = 1.0;  // episodes start at full power
  s.c_in_min.assign(horizon, c_in_min);
  s.c_out_max.assign(horizon, c_out_max);
  return s;
}

inline lppo::env::Scenario ramp_scenario(int horizon, double level, uint64_t seed = 2) {
  lppo::env::Scenario s = constant_scenario(horizon, 1.0, 0.15, 0.72, seed);
  const int start = horizon / 5, len = horizon / 3;
  for (int t = 0; t < horizon; ++t) {
    if (t < start)
      s.demand[t] = 1.0;
    else if (t < start + len)
      s.demand[t] = 1.0 + (level - 1.0) * (t - start) / static_cast<double>(len);
    else
      s.demand[t] = level;
  }
  return s;
}

}  // namespace testing_helpers
