#include "lppo/environment.hpp"

#include <cmath>
#include <stdexcept>

#include "lppo/textio.hpp"

namespace lppo::env {

std::pair<int, int> constraint_indicator(double t_hx_s_in, double t_hx_s_out,
                                         double c_in_min, double c_out_max) {
  const int c1 = (c_in_min - t_hx_s_in) > 0.0 ? 1 : 0;
  const int c2 = (t_hx_s_out - c_out_max) > 0.0 ? 1 : 0;
  return {c1, c2};
}

double primary_reward(double demand, double action) {
  const double e = demand - action;
  return -e * e;
}

Environment::Environment(Backing backing, const sysid::RomModel* rom,
                         const plant::PlantConfig& plant_config, const EnvParams& params)
    : backing_(backing), rom_(rom), plant_config_(plant_config), params_(params) {
  if (rom_ == nullptr) throw std::invalid_argument("environment: ROM required");
  if (rom_->state_dim() != kRomStateDim)
    throw std::invalid_argument("environment: ROM state dimension mismatch");
  plant_config_.validate();
  const double n = rom_->dt_rom / plant_config_.dt_plant;
  supervisory_substeps_ = static_cast<int>(std::llround(n));
  if (supervisory_substeps_ < 1 || std::fabs(n - supervisory_substeps_) > 1e-9)
    throw std::invalid_argument("environment: dt_rom must be a multiple of dt_plant");
}

Observation Environment::reset(const Scenario& scenario) {
  if (scenario.horizon < 2 || scenario.demand.empty())
    throw std::invalid_argument("environment: invalid scenario");
  scenario_ = scenario;
  t_ = 0;
  done_ = false;

  plant_state_ = plant::trim(scenario_.demand[0], plant_config_);
  if (backing_ == Backing::kRom) {
    x_ = rom_state_from_plant(plant_state_);
  } else {
    pids_ = plant::make_supervisory_pids(plant_config_, plant_state_);
  }
  return observe();
}

Eigen::VectorXd Environment::raw_state() const {
  return backing_ == Backing::kRom ? x_ : rom_state_from_plant(plant_state_);
}

Observation Environment::observe() const {
  Observation o;
  const Eigen::VectorXd raw = raw_state();
  o.x = (raw - rom_->target_mean).array() / rom_->target_scale.array();
  const int tb = std::min(t_, scenario_.horizon - 1);
  o.c_in_min = scenario_.c_in_min[tb];
  o.c_out_max = scenario_.c_out_max[tb];
  o.demand = scenario_.demand[tb];
  return o;
}

Environment::StepResult Environment::step(double action) {
  if (done_) throw std::invalid_argument("environment: episode is done");
  if (!(action >= params_.action_min && action <= params_.action_max))
    throw std::invalid_argument("environment: action outside bounds");

  if (backing_ == Backing::kRom) {
    Eigen::VectorXd a(1);
    a(0) = action;
    x_ = sysid::rom_step(*rom_, x_, a);
    if (x_.cwiseAbs().maxCoeff() > 1e6)
      throw std::runtime_error("environment: ROM state diverged at step " + fmt_int(t_));
  } else {
    for (int i = 0; i < supervisory_substeps_; ++i) {
      auto r = plant::supervisory_step(plant_state_, action, pids_, plant_config_,
                                       plant_config_.dt_plant);
      plant_state_ = r.state;
      pids_ = r.pids;
    }
  }

  const double demand_now = scenario_.demand[t_];
  ++t_;
  done_ = t_ >= scenario_.horizon;

  const Eigen::VectorXd raw = raw_state();
  const int tb = std::min(t_, scenario_.horizon - 1);  // bounds at arrival time
  auto [c1, c2] = constraint_indicator(raw(kIdxTHxSIn), raw(kIdxTHxSOut),
                                       scenario_.c_in_min[tb], scenario_.c_out_max[tb]);
  StepResult res;
  res.reward.r0 = primary_reward(demand_now, action);
  res.reward.c1 = c1;
  res.reward.c2 = c2;
  res.done = done_;
  res.obs = observe();
  return res;
}

void EpisodeTrace::push(double a, double p, double cin, double cout, double tin, double tout,
                        const RewardVector& r) {
  action.push_back(a);
  demand.push_back(p);
  c_in_min.push_back(cin);
  c_out_max.push_back(cout);
  t_hx_s_in.push_back(tin);
  t_hx_s_out.push_back(tout);
  r0.push_back(r.r0);
  c1.push_back(r.c1);
  c2.push_back(r.c2);
}

void save_episode_csv(const std::string& path, const EpisodeTrace& trace) {
  CsvWriter w(path,
              {"t", "action", "demand", "c_in_min", "c_out_max", "t_hx_s_in", "t_hx_s_out",
               "r0", "c1", "c2"},
              {"# scenario_seed=" + std::to_string(trace.scenario_seed)});
  for (int t = 0; t < trace.length(); ++t)
    w.row({static_cast<double>(t), trace.action[t], trace.demand[t], trace.c_in_min[t],
           trace.c_out_max[t], trace.t_hx_s_in[t], trace.t_hx_s_out[t], trace.r0[t],
           static_cast<double>(trace.c1[t]), static_cast<double>(trace.c2[t])});
  w.close();
}

EpisodeTrace load_episode_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  EpisodeTrace e;
  for (const auto& c : t.comments) {
    const auto pos = c.find("scenario_seed=");
    if (pos != std::string::npos) e.scenario_seed = std::stoull(c.substr(pos + 14));
  }
  const int ca = t.col("action"), cp = t.col("demand"), ci = t.col("c_in_min"),
            co = t.col("c_out_max"), cti = t.col("t_hx_s_in"), cto = t.col("t_hx_s_out"),
            cr = t.col("r0"), c1 = t.col("c1"), c2 = t.col("c2");
  for (const auto& row : t.rows) {
    RewardVector r{row[cr], static_cast<int>(row[c1]), static_cast<int>(row[c2])};
    e.push(row[ca], row[cp], row[ci], row[co], row[cti], row[cto], r);
  }
  return e;
}

}  // namespace lppo::env
