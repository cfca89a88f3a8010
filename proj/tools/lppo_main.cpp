// Command-line front end for the load-following constrained-RL pipeline:
// gen-scenarios -> simulate-plant -> identify -> train -> evaluate ->
// transfer -> plot.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "lppo/checkpoint.hpp"
#include "lppo/config.hpp"
#include "lppo/environment.hpp"
#include "lppo/metrics.hpp"
#include "lppo/plant.hpp"
#include "lppo/romstate.hpp"
#include "lppo/scenario.hpp"
#include "lppo/svg.hpp"
#include "lppo/sysid.hpp"
#include "lppo/textio.hpp"
#include "lppo/trainer.hpp"

namespace fs = std::filesystem;
using namespace lppo;

namespace {

std::string scenario_filename(const std::string& split, int index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "scen_%s_%06d.csv", split.c_str(), index);
  return buf;
}

void cmd_gen_scenarios(const std::string& config_path, const std::string& out_dir) {
  const auto cfg = config::parse_config(config_path);
  fs::create_directories(out_dir);
  const auto set = env::make_scenario_set(cfg.seed, cfg.n_train, cfg.n_val, cfg.n_test,
                                          cfg.horizon, cfg.demand, cfg.schedule);
  std::vector<env::ManifestEntry> manifest;
  auto dump = [&](const std::vector<env::Scenario>& list, const std::string& split) {
    for (size_t i = 0; i < list.size(); ++i) {
      const std::string name = scenario_filename(split, static_cast<int>(i));
      env::save_scenario(out_dir + "/" + name, list[i]);
      manifest.push_back({name, list[i].seed, split});
    }
  };
  dump(set.train, "train");
  dump(set.val, "val");
  dump(set.test, "test");
  env::save_manifest(out_dir + "/manifest.csv", manifest);
  std::cout << "wrote " << manifest.size() << " scenarios to " << out_dir << "\n";
}

void cmd_simulate_plant(const std::string& config_path, const std::string& scen_dir,
                        const std::string& out_dir, int limit) {
  const auto cfg = config::parse_config(config_path);
  fs::create_directories(out_dir);
  auto scenarios = env::load_scenarios(scen_dir, "train");
  const int n = limit > 0 ? std::min<int>(limit, scenarios.size())
                          : std::min<int>(cfg.n_sysid_trajectories, scenarios.size());

  const int rec_every = static_cast<int>(std::llround(cfg.dt_record / cfg.plant.dt_plant));

  std::vector<env::ManifestEntry> manifest;
  for (int i = 0; i < n; ++i) {
    const auto& sc = scenarios[i];
    Rng dither_rng(mix_seed(sc.seed, 0xd17e));
    plant::PlantState state = plant::trim(sc.demand[0], cfg.plant);
    auto pids = plant::make_supervisory_pids(cfg.plant, state);

    // each record row carries the setpoint that drives the interval
    // starting at that row, so the sub-sampled control column aligns with
    // the transitions the ROM is fitted on
    std::vector<plant::TrajectoryRow> rows;
    const int intervals = sc.horizon * cfg.rom_subsample;
    double setpoint = sc.demand[0];
    for (int i_rec = 0; i_rec < intervals; ++i_rec) {
      if (i_rec % cfg.rom_subsample == 0) {
        // probing dither, constant over one ROM step
        const double probe =
            cfg.sysid_dither > 0 ? dither_rng.uniform(-cfg.sysid_dither, cfg.sysid_dither)
                                 : 0.0;
        setpoint = std::clamp(sc.demand[i_rec / cfg.rom_subsample] + probe, cfg.action_min,
                              cfg.action_max);
      }
      rows.push_back({state, setpoint});
      for (int k = 0; k < rec_every; ++k) {
        auto r = plant::supervisory_step(state, setpoint, pids, cfg.plant,
                                         cfg.plant.dt_plant);
        state = r.state;
        pids = r.pids;
      }
    }
    rows.push_back({state, setpoint});
    char buf[64];
    std::snprintf(buf, sizeof(buf), "traj_%06d.csv", i);
    plant::write_trajectory_csv(out_dir + "/" + std::string(buf), rows);
    manifest.push_back({buf, sc.seed, "train"});
  }
  env::save_manifest(out_dir + "/manifest.csv", manifest);
  std::cout << "simulated " << n << " trajectories to " << out_dir << "\n";
}

sysid::SysIdTrajectory trajectory_from_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  sysid::SysIdTrajectory traj;
  const auto& names = rom_state_names();
  std::vector<int> cols;
  for (const auto& n : names) cols.push_back(t.col(n));
  const int c_set = t.col("setpoint");
  traj.states.resize(t.rows.size(), names.size());
  traj.controls.resize(t.rows.size());
  for (size_t r = 0; r < t.rows.size(); ++r) {
    for (size_t c = 0; c < cols.size(); ++c) traj.states(r, c) = t.rows[r][cols[c]];
    traj.controls(r) = t.rows[r][c_set];
  }
  return traj;
}

void cmd_identify(const std::string& config_path, const std::string& data_dir,
                  const std::string& out_path) {
  const auto cfg = config::parse_config(config_path);
  std::vector<sysid::SysIdTrajectory> trajectories;
  for (const auto& entry : env::load_manifest(data_dir + "/manifest.csv"))
    trajectories.push_back(trajectory_from_csv(data_dir + "/" + entry.file));

  const auto library = sysid::FeatureLibrary::make(cfg.rom_degree, true, rom_state_names(),
                                                   {"setpoint"});
  auto [rom, report] =
      sysid::identify_rom(trajectories, library, cfg.identify_options(), rom_state_names());
  sysid::save_rom(out_path, rom);
  std::cout << report.summary();
  std::cout << "rom written to " << out_path << "\n";
}

train::TrainSetup make_setup(const config::RunConfig& cfg, const sysid::RomModel* rom,
                             const std::vector<env::Scenario>* scenarios) {
  train::TrainSetup setup;
  setup.config = cfg.train_config();
  setup.env_params = cfg.env_params();
  const plant::PlantConfig plant_cfg = cfg.plant;
  const env::EnvParams env_params = cfg.env_params();
  setup.env_factory = [rom, plant_cfg, env_params]() {
    return env::Environment(env::Environment::Backing::kRom, rom, plant_cfg, env_params);
  };
  setup.train_scenarios = scenarios;
  return setup;
}

std::string ckpt_name(int epoch) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "ckpt_%06d.txt", epoch);
  return buf;
}

void cmd_train(const std::string& config_path, const std::string& rom_path,
               const std::string& scen_dir, const std::string& out_dir,
               const std::string& fixed_lambda, const std::string& resume_path, bool force) {
  auto cfg = config::parse_config(config_path);
  if (!fixed_lambda.empty()) {
    const auto comma = fixed_lambda.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("--fixed-lambda expects 'L1,L2'");
    cfg.trainer.fixed_lambda = true;
    cfg.trainer.fixed_lambda1 = parse_double(fixed_lambda.substr(0, comma), "fixed lambda 1");
    cfg.trainer.fixed_lambda2 = parse_double(fixed_lambda.substr(comma + 1), "fixed lambda 2");
    if (cfg.trainer.fixed_lambda1 < 0 || cfg.trainer.fixed_lambda2 < 0)
      throw std::invalid_argument("--fixed-lambda values must be >= 0");
  }
  cfg.train_config().validate();

  const sysid::RomModel rom = sysid::load_rom(rom_path);
  const auto scenarios = env::load_scenarios(scen_dir, "train");
  fs::create_directories(out_dir);

  train::TrainerState state;
  if (!resume_path.empty()) {
    const auto loaded = ckpt::load_checkpoint(resume_path);
    if (loaded.config_hash != cfg.hash() && !force)
      throw std::invalid_argument(
          "checkpoint config hash mismatch; pass --force to resume anyway");
    state = loaded.state;
  } else {
    state = train::init_trainer(cfg.train_config(), kRomStateDim + 3, cfg.action_min,
                                cfg.action_max);
  }

  // stats.csv: on resume keep rows before the resume epoch
  const std::string stats_path = out_dir + "/stats.csv";
  std::string stats_head = std::string(train::kStatsHeader) + "\n";
  if (!resume_path.empty() && fs::exists(stats_path)) {
    std::istringstream in(read_file(stats_path));
    std::string line, kept;
    bool header = true;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (header) {
        header = false;
        continue;
      }
      const auto fields = split_csv(line);
      if (!fields.empty() && parse_int(fields[0], "epoch") < state.epoch)
        kept += line + "\n";
    }
    stats_head += kept;
  }
  write_file(stats_path, stats_head);

  std::ofstream stats_out(stats_path, std::ios::app);
  train::TrainSetup setup = make_setup(cfg, &rom, &scenarios);
  setup.on_epoch = [&stats_out](const train::EpochStats& s) {
    stats_out << s.epoch << "," << fmt_g17(s.mean_return) << "," << fmt_g17(s.j1) << ","
              << fmt_g17(s.j2) << "," << fmt_g17(s.lambda1) << "," << fmt_g17(s.lambda2)
              << "," << fmt_g17(s.entropy) << "," << fmt_g17(s.kl_stop) << ","
              << s.policy_iters << "," << s.value_iters << "," << fmt_g17(s.wall_s) << "\n";
    stats_out.flush();
    std::cerr << "epoch " << s.epoch << " return " << s.mean_return << " J=(" << s.j1 << ","
              << s.j2 << ") lambda=(" << s.lambda1 << "," << s.lambda2 << ")\n";
  };
  setup.on_checkpoint = [&cfg, &rom, &out_dir](const train::TrainerState& st) {
    ckpt::save_checkpoint(out_dir + "/" + ckpt_name(st.epoch),
                          ckpt::make_checkpoint(cfg, rom, st));
  };
  train::train(setup, state);
  std::cout << "training complete; checkpoints in " << out_dir << "\n";
}

void cmd_evaluate(const std::string& ckpt_path, const std::string& scen_dir,
                  const std::string& out_path, const std::string& split, bool stochastic) {
  const auto checkpoint = ckpt::load_checkpoint(ckpt_path);
  const auto cfg = ckpt::checkpoint_config(checkpoint);
  const sysid::RomModel rom = ckpt::checkpoint_rom(checkpoint);
  const auto scenarios = env::load_scenarios(scen_dir, split);

  const plant::PlantConfig plant_cfg = cfg.plant;
  const env::EnvParams env_params = cfg.env_params();
  const sysid::RomModel* rom_ptr = &rom;
  auto factory = [rom_ptr, plant_cfg, env_params]() {
    return env::Environment(env::Environment::Backing::kRom, rom_ptr, plant_cfg, env_params);
  };
  const auto report = metrics::evaluate_policy(checkpoint.state.policy, scenarios, factory,
                                               !stochastic, mix_seed(cfg.seed, 0xe7a1));
  metrics::save_report_csv(out_path, report);
  std::cout << "r_bar=" << fmt_g17(report.reward_cost_score)
            << " d=" << fmt_g17(report.violation_distance)
            << " omega=" << fmt_g17(report.violation_rate)
            << " p_hat=" << fmt_g17(report.joint_safety) << " n=" << report.scenario_count
            << "\n";
}

void cmd_transfer(const std::string& ckpt_path, const std::string& scenario_path,
                  double eta, const std::string& out_path) {
  const auto checkpoint = ckpt::load_checkpoint(ckpt_path);
  const auto cfg = ckpt::checkpoint_config(checkpoint);
  const sysid::RomModel rom = ckpt::checkpoint_rom(checkpoint);
  const auto scenario = env::load_scenario(scenario_path);

  env::Environment environment(env::Environment::Backing::kPlant, &rom, cfg.plant,
                               cfg.env_params());
  const auto result =
      train::transfer_rollout(checkpoint.state.policy, environment, scenario, eta);
  env::save_episode_csv(out_path, result.trace);
  if (!result.diagnostic.empty())
    std::cerr << "transfer truncated: " << result.diagnostic << "\n";
  std::cout << "transfer episode (" << result.trace.length() << " steps) written to "
            << out_path << "\n";
}

void cmd_plot(const std::string& in_path, const std::string& out_path) {
  const CsvTable t = read_csv(in_path);
  auto has = [&t](const char* name) {
    return std::find(t.header.begin(), t.header.end(), name) != t.header.end();
  };
  auto column = [&t](int c) {
    std::vector<double> v;
    for (const auto& r : t.rows) v.push_back(r[c]);
    return v;
  };

  std::vector<svg::Panel> panels;
  if (has("action") && has("t_hx_s_in")) {  // episode log
    std::vector<double> ts = column(t.col("t"));
    svg::Panel top{"demand tracking", "step", "power fraction", {}};
    top.series.push_back({"demand", ts, column(t.col("demand")), "#555555", true});
    top.series.push_back({"action", ts, column(t.col("action")), "#1f77b4", false});
    svg::Panel bottom{"secondary temperatures vs bounds", "step", "normalized T", {}};
    bottom.series.push_back({"t_hx_s_in", ts, column(t.col("t_hx_s_in")), "#2ca02c", false});
    bottom.series.push_back({"t_hx_s_out", ts, column(t.col("t_hx_s_out")), "#d62728", false});
    bottom.series.push_back({"c_in_min", ts, column(t.col("c_in_min")), "#2ca02c", true});
    bottom.series.push_back({"c_out_max", ts, column(t.col("c_out_max")), "#d62728", true});
    panels = {top, bottom};
  } else if (has("lambda1")) {  // training stats
    std::vector<double> ep = column(t.col("epoch"));
    svg::Panel top{"multipliers and costs", "epoch", "value", {}};
    top.series.push_back({"lambda1", ep, column(t.col("lambda1")), "#1f77b4", false});
    top.series.push_back({"lambda2", ep, column(t.col("lambda2")), "#ff7f0e", false});
    top.series.push_back({"J1", ep, column(t.col("J1")), "#1f77b4", true});
    top.series.push_back({"J2", ep, column(t.col("J2")), "#ff7f0e", true});
    svg::Panel bottom{"return and entropy", "epoch", "value", {}};
    bottom.series.push_back({"mean_return", ep, column(t.col("mean_return")), "#2ca02c", false});
    bottom.series.push_back({"entropy", ep, column(t.col("entropy")), "#9467bd", true});
    panels = {top, bottom};
  } else {
    throw std::invalid_argument("plot: unrecognized CSV layout in " + in_path);
  }
  svg::write_chart(out_path, panels);
  std::cout << "chart written to " << out_path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chance-constrained load-following RL toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_path, scen_dir, data_dir, rom_path, ckpt_path, scenario_path,
      in_path, fixed_lambda, resume_path, split = "test";
  int limit = 0;
  double eta = 5e-4;
  bool force = false, stochastic = false;

  auto* gen = app.add_subcommand("gen-scenarios", "generate demand/constraint scenarios");
  gen->add_option("--config", config_path)->required();
  gen->add_option("--out", out_path)->required();

  auto* sim = app.add_subcommand("simulate-plant", "closed-loop reference-plant transients");
  sim->add_option("--config", config_path)->required();
  sim->add_option("--scenarios", scen_dir)->required();
  sim->add_option("--out", out_path)->required();
  sim->add_option("--limit", limit, "trajectory count (default n_sysid_trajectories)");

  auto* ident = app.add_subcommand("identify", "fit the sparse reduced-order model");
  ident->add_option("--config", config_path)->required();
  ident->add_option("--data", data_dir)->required();
  ident->add_option("--out", out_path)->required();

  auto* tr = app.add_subcommand("train", "train the constrained PPO agent");
  tr->add_option("--config", config_path)->required();
  tr->add_option("--rom", rom_path)->required();
  tr->add_option("--scenarios", scen_dir)->required();
  tr->add_option("--out", out_path)->required();
  tr->add_option("--fixed-lambda", fixed_lambda, "L1,L2 disables multiplier learning");
  tr->add_option("--resume", resume_path, "checkpoint to continue from");
  tr->add_flag("--force", force, "allow resume across config changes");

  auto* ev = app.add_subcommand("evaluate", "metrics over a scenario split");
  ev->add_option("--ckpt", ckpt_path)->required();
  ev->add_option("--scenarios", scen_dir)->required();
  ev->add_option("--out", out_path)->required();
  ev->add_option("--split", split, "scenario split (default test)");
  ev->add_flag("--stochastic", stochastic, "sample actions instead of the mean");

  auto* tf = app.add_subcommand("transfer", "deploy on the reference plant with action clipping");
  tf->add_option("--ckpt", ckpt_path)->required();
  tf->add_option("--scenario", scenario_path)->required();
  tf->add_option("--eta", eta, "per-step action clip (inf disables)");
  tf->add_option("--out", out_path)->required();

  auto* pl = app.add_subcommand("plot", "render a CSV artifact as SVG");
  pl->add_option("--in", in_path)->required();
  pl->add_option("--out", out_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) cmd_gen_scenarios(config_path, out_path);
    if (sim->parsed()) cmd_simulate_plant(config_path, scen_dir, out_path, limit);
    if (ident->parsed()) cmd_identify(config_path, data_dir, out_path);
    if (tr->parsed())
      cmd_train(config_path, rom_path, scen_dir, out_path, fixed_lambda, resume_path, force);
    if (ev->parsed()) cmd_evaluate(ckpt_path, scen_dir, out_path, split, stochastic);
    if (tf->parsed()) cmd_transfer(ckpt_path, scenario_path, eta, out_path);
    if (pl->parsed()) cmd_plot(in_path, out_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
