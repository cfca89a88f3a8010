#pragma once

#include <array>
#include <string>
#include <vector>

namespace lppo::plant {

/// Full state of the synthetic reference plant. Temperatures are
/// normalized as (T - T_ref)/dT_ref, power and flows as fractions of
/// nominal, reactivity in absolute dk/k (one dollar = beta).
struct PlantState {
  double power = 1.0;
  double precursor = 0.0;
  double t_core_in = 0.0;
  double t_core_out = 1.0;
  double t_hx_s_in = 0.2;
  double t_hx_s_out = 0.7;
  double mdot_p = 1.0;
  double mdot_s = 1.0;
  double p_core_out = 1.0;
  double q_hx = 1.0;
  double q_sg = 1.0;
  double rho_ext = 0.0;
  double time = 0.0;

  static constexpr int kOdeDim = 12;  // everything except time
  std::array<double, kOdeDim> ode_values() const;
  void set_ode_values(const std::array<double, kOdeDim>& v);
  static const char* ode_field_name(int i);

  bool finite() const;
};

/// One PID loop. Gains may be negative (reverse-acting loops).
struct PidState {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double integral = 0.0;
  double prev_error = 0.0;
  double out_min = -1.0;
  double out_max = 1.0;
};

struct PidGains {
  double kp = 0.0, ki = 0.0, kd = 0.0, out_min = -1.0, out_max = 1.0;
};

/// Physics and control constants. Defaults give a stable plant whose
/// secondary-side temperatures settle to new equilibria after a load
/// change, with transport lag between power and secondary response.
struct PlantConfig {
  // point kinetics
  double beta = 0.0065;        // delayed-neutron fraction
  double lambda_gen = 5e-3;    // neutron generation time [s]
  double lambda_d = 0.08;      // precursor decay constant [1/s]
  double alpha_f = -3e-3;      // reactivity per normalized core-outlet temp
  double alpha_c = -3e-3;      // reactivity per normalized core-inlet temp

  // thermal-hydraulic nodes
  double tau_core_out = 20.0;  // [s]
  double tau_core_in = 40.0;
  double tau_hx_s_out = 30.0;
  double tau_hx_s_in = 60.0;
  double tau_q_hx = 25.0;
  double tau_q_sg = 45.0;
  double tau_pressure = 5.0;

  double r_p = 1.0;        // normalized core temperature rise at nominal
  double r_s = 0.5;        // normalized secondary rise at nominal
  double k_hx = 1.25;      // HX conductance at nominal flows
  double k_sg = 2.0;       // SG conductance
  double t_sink = 0.2;     // SG heat-sink temperature (fixed boundary)
  double flow_exp = 0.8;   // flow dependence of HX conductance
  double k_dp = 0.2;       // pump-curve pressure sensitivity

  double t_core_in_nom = 0.0;
  double t_core_out_nom = 1.0;

  double dt_plant = 0.5;   // integration step [s]

  // supervisory loops: power -> rho_ext, t_core_out -> mdot_p,
  // t_core_in -> mdot_s
  PidGains pid_power{2e-3, 1e-4, 0.0, -5.85e-3, 5.85e-3};
  PidGains pid_mdot_p{-4.0, -0.2, 0.0, 0.05, 1.5};
  PidGains pid_mdot_s{-2.0, -0.08, 0.0, 0.05, 1.5};

  void validate() const;  // throws std::invalid_argument
};

/// Time derivatives of the plant ODE fields (actuators held constant).
/// Throws std::domain_error on non-finite state.
std::array<double, PlantState::kOdeDim> plant_derivs(const PlantState& state,
                                                     const PlantConfig& config);

/// One classical RK4 step of size dt. Requires 0 < dt <= 8*dt_plant.
/// Throws std::runtime_error naming the offending field if the result
/// is non-finite.
PlantState plant_step(const PlantState& state, const PlantConfig& config, double dt);

/// Steady state at the requested power fraction (in [0.4, 1.05]) with
/// core temperatures at their nominal setpoints. Throws
/// std::runtime_error with the residual norm on failure.
PlantState trim(double power_fraction, const PlantConfig& config);

/// Largest derivative magnitude over the ODE fields.
double max_abs_deriv(const PlantState& state, const PlantConfig& config);

struct PidResult {
  double output = 0.0;
  PidState pid;
};

/// Positional PID with saturation and anti-windup (integral frozen while
/// the output is saturated in the direction the error is pushing, and
/// clamped so ki*integral stays within the output bounds).
PidResult pid_step(const PidState& pid, double setpoint, double measurement, double dt);

PidState make_pid(const PidGains& gains);

struct SupervisoryResult {
  PlantState state;
  std::array<PidState, 3> pids;
};

/// One supervisory control period: the three PID loops set rho_ext,
/// mdot_p and mdot_s, then the plant advances by dt.
/// power_setpoint must lie in [0.4, 1.05].
SupervisoryResult supervisory_step(const PlantState& state, double power_setpoint,
                                   const std::array<PidState, 3>& pids,
                                   const PlantConfig& config, double dt);

/// PIDs initialized so their outputs start at the trim actuator values.
std::array<PidState, 3> make_supervisory_pids(const PlantConfig& config,
                                              const PlantState& trim_state);

/// Trajectory record for CSV export; one row per dt_record.
struct TrajectoryRow {
  PlantState state;
  double setpoint = 1.0;
};

extern const char* const kTrajectoryHeader;

void write_trajectory_csv(const std::string& path, const std::vector<TrajectoryRow>& rows);

}  // namespace lppo::plant
