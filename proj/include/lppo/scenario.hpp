#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lppo::env {

/// Demand-curve generator parameters. Curves hold at 1.0, then take
/// rate-limited piecewise-linear ramps to levels in [min_level, 1.0]
/// with holds between.
struct DemandParams {
  double min_level = 0.5;
  int min_ramps = 1;
  int max_ramps = 3;
  double max_rate_per_s = 6e-4;   // |d demand/dt| hard limit
  double min_rate_per_s = 2e-4;
  double dt_step_s = 25.0;        // seconds per scenario step
  int min_hold_steps = 10;
  int max_hold_steps = 60;
};

/// Constraint-schedule parameters: step-wise constant bounds with a few
/// step changes, always strictly containing the nominal-trim secondary
/// temperatures so demand = 1.0 is feasible.
struct ScheduleParams {
  int max_step_changes = 2;
  double c_in_min_lo = 0.112;
  double c_in_min_hi = 0.148;
  double c_out_max_lo = 0.705;
  double c_out_max_hi = 0.75;
  int min_segment_steps = 40;
};

struct Scenario {
  uint64_t seed = 0;
  int horizon = 0;
  std::vector<double> demand;     // size horizon
  std::vector<double> c_in_min;   // size horizon
  std::vector<double> c_out_max;  // size horizon
  std::string split_tag;          // train|val|test
};

struct ScenarioSet {
  std::vector<Scenario> train, val, test;
};

std::vector<double> gen_demand(uint64_t seed, int horizon, const DemandParams& params);

struct Schedule {
  std::vector<double> c_in_min, c_out_max;
};
Schedule gen_constraint_schedule(uint64_t seed, int horizon, const ScheduleParams& params);

Scenario make_scenario(uint64_t seed, int horizon, const std::string& split_tag,
                       const DemandParams& dp, const ScheduleParams& sp);

ScenarioSet make_scenario_set(uint64_t master_seed, int n_train, int n_val, int n_test,
                              int horizon, const DemandParams& dp, const ScheduleParams& sp);

/// CSV round trip: `t,demand,c_in_min,c_out_max` with a comment line
/// carrying seed and split tag.
void save_scenario(const std::string& path, const Scenario& s);
Scenario load_scenario(const std::string& path);

struct ManifestEntry {
  std::string file;
  uint64_t seed = 0;
  std::string split;
};

void save_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> load_manifest(const std::string& path);

/// Scenarios of one split, in manifest (generation) order.
std::vector<Scenario> load_scenarios(const std::string& dir, const std::string& split);

}  // namespace lppo::env
