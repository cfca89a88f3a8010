#pragma once

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <string>
#include <vector>

#include "lppo/plant.hpp"
#include "lppo/romstate.hpp"
#include "lppo/scenario.hpp"
#include "lppo/sysid.hpp"

namespace lppo::env {

/// s_t = [x_t, c_t, p_t]: normalized model state, current constraint
/// bounds, current demand.
struct Observation {
  Eigen::VectorXd x;  // normalized ROM/plant state
  double c_in_min = 0.0;
  double c_out_max = 0.0;
  double demand = 1.0;

  Eigen::VectorXd flat() const {
    Eigen::VectorXd v(x.size() + 3);
    v << x, c_in_min, c_out_max, demand;
    return v;
  }
};

/// r = [r0, c1, c2]: load-following reward plus binary constraint costs.
struct RewardVector {
  double r0 = 0.0;
  int c1 = 0;
  int c2 = 0;
};

/// C_k = 1 iff the k-th constraint function is strictly positive
/// (boundary equality is safe).
std::pair<int, int> constraint_indicator(double t_hx_s_in, double t_hx_s_out,
                                         double c_in_min, double c_out_max);

/// r0 = -(p - a)^2.
double primary_reward(double demand, double action);

struct EnvParams {
  double action_min = 0.4;
  double action_max = 1.05;
};

/// The constrained MDP over a scenario, backed either by the identified
/// ROM (training) or by the reference plant under supervisory control
/// (transfer). Exclusively owned by one worker.
class Environment {
 public:
  enum class Backing { kRom, kPlant };

  Environment(Backing backing, const sysid::RomModel* rom,
              const plant::PlantConfig& plant_config, const EnvParams& params);

  /// Initialize at trim(demand_0); returns the first observation.
  Observation reset(const Scenario& scenario);

  struct StepResult {
    Observation obs;
    RewardVector reward;
    bool done = false;
  };

  /// Advance one ROM step with the given power setpoint. Throws
  /// std::invalid_argument for out-of-bounds actions or stepping a done
  /// episode; std::runtime_error if the backing model diverges.
  StepResult step(double action);

  int t() const { return t_; }
  bool done() const { return done_; }
  const Scenario& scenario() const { return scenario_; }
  const EnvParams& params() const { return params_; }

  /// Raw (unnormalized) model state in rom_state_names() order.
  Eigen::VectorXd raw_state() const;
  int obs_dim() const { return kRomStateDim + 3; }

 private:
  Observation observe() const;

  Backing backing_;
  const sysid::RomModel* rom_;
  plant::PlantConfig plant_config_;
  EnvParams params_;
  Scenario scenario_;
  int t_ = 0;
  bool done_ = true;

  Eigen::VectorXd x_;  // ROM backing
  plant::PlantState plant_state_;
  std::array<plant::PidState, 3> pids_{};
  int supervisory_substeps_ = 0;
};

/// Per-step record of a rolled-out episode; shared by evaluation,
/// transfer, and metrics.
struct EpisodeTrace {
  uint64_t scenario_seed = 0;
  std::vector<double> action, demand, c_in_min, c_out_max, t_hx_s_in, t_hx_s_out, r0;
  std::vector<int> c1, c2;

  int length() const { return static_cast<int>(action.size()); }
  void push(double a, double p, double cin, double cout, double tin, double tout,
            const RewardVector& r);
};

void save_episode_csv(const std::string& path, const EpisodeTrace& trace);
EpisodeTrace load_episode_csv(const std::string& path);

}  // namespace lppo::env
