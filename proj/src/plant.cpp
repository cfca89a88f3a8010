#include "lppo/plant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lppo/textio.hpp"

namespace lppo::plant {

std::array<double, PlantState::kOdeDim> PlantState::ode_values() const {
  return {power,  precursor, t_core_in, t_core_out, t_hx_s_in, t_hx_s_out,
          mdot_p, mdot_s,    p_core_out, q_hx,      q_sg,      rho_ext};
}

void PlantState::set_ode_values(const std::array<double, kOdeDim>& v) {
  power = v[0];
  precursor = v[1];
  t_core_in = v[2];
  t_core_out = v[3];
  t_hx_s_in = v[4];
  t_hx_s_out = v[5];
  mdot_p = v[6];
  mdot_s = v[7];
  p_core_out = v[8];
  q_hx = v[9];
  q_sg = v[10];
  rho_ext = v[11];
}

const char* PlantState::ode_field_name(int i) {
  static const char* names[PlantState::kOdeDim] = {
      "power",  "precursor", "t_core_in", "t_core_out", "t_hx_s_in", "t_hx_s_out",
      "mdot_p", "mdot_s",    "p_core_out", "q_hx",      "q_sg",      "rho_ext"};
  return names[i];
}

bool PlantState::finite() const {
  for (double v : ode_values())
    if (!std::isfinite(v)) return false;
  return std::isfinite(time);
}

void PlantConfig::validate() const {
  auto req = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("plant config: ") + what);
  };
  req(beta > 0, "beta must be > 0");
  req(lambda_gen > 0, "lambda_gen must be > 0");
  req(lambda_d > 0, "lambda_d must be > 0");
  req(tau_core_out > 0 && tau_core_in > 0 && tau_hx_s_out > 0 && tau_hx_s_in > 0 &&
          tau_q_hx > 0 && tau_q_sg > 0 && tau_pressure > 0,
      "all time constants must be > 0");
  req(dt_plant > 0, "dt_plant must be > 0");
  req(k_hx > 0 && k_sg > 0 && r_p > 0 && r_s > 0, "heat-transfer constants must be > 0");
  req(t_core_out_nom > t_core_in_nom, "nominal core outlet must exceed inlet");
  req(pid_mdot_p.ki != 0 && pid_mdot_s.ki != 0, "flow loops need integral action");
}

std::array<double, PlantState::kOdeDim> plant_derivs(const PlantState& s,
                                                     const PlantConfig& c) {
  if (!s.finite()) throw std::domain_error("plant_derivs: non-finite state");

  const double rho = s.rho_ext + c.alpha_f * (s.t_core_out - c.t_core_out_nom) +
                     c.alpha_c * (s.t_core_in - c.t_core_in_nom);

  std::array<double, PlantState::kOdeDim> d{};
  d[0] = ((rho - c.beta) / c.lambda_gen) * s.power + c.lambda_d * s.precursor;
  d[1] = (c.beta / c.lambda_gen) * s.power - c.lambda_d * s.precursor;
  d[3] = (s.t_core_in + c.r_p * s.power / s.mdot_p - s.t_core_out) / c.tau_core_out;
  d[2] = (s.t_core_out - c.r_p * s.q_hx / s.mdot_p - s.t_core_in) / c.tau_core_in;
  const double q_hx_target = c.k_hx * std::pow(s.mdot_p * s.mdot_s, c.flow_exp) *
                             (s.t_core_out - s.t_hx_s_in);
  d[9] = (q_hx_target - s.q_hx) / c.tau_q_hx;
  d[5] = (s.t_hx_s_in + c.r_s * s.q_hx / s.mdot_s - s.t_hx_s_out) / c.tau_hx_s_out;
  d[4] = (s.t_hx_s_out - c.r_s * s.q_sg / s.mdot_s - s.t_hx_s_in) / c.tau_hx_s_in;
  d[10] = (c.k_sg * (s.t_hx_s_out - c.t_sink) - s.q_sg) / c.tau_q_sg;
  d[8] = (1.0 + c.k_dp * (s.mdot_p * s.mdot_p - 1.0) - s.p_core_out) / c.tau_pressure;
  // actuators (mdot_p, mdot_s, rho_ext) are held by the supervisory layer
  d[6] = d[7] = d[11] = 0.0;
  return d;
}

PlantState plant_step(const PlantState& state, const PlantConfig& config, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("plant_step: dt must be > 0");
  if (dt > 8.0 * config.dt_plant)
    throw std::invalid_argument("plant_step: dt exceeds 8*dt_plant");

  const auto y0 = state.ode_values();
  auto eval = [&](const std::array<double, PlantState::kOdeDim>& y) {
    PlantState s = state;
    s.set_ode_values(y);
    return plant_derivs(s, config);
  };

  const auto k1 = eval(y0);
  std::array<double, PlantState::kOdeDim> y{};
  for (int i = 0; i < PlantState::kOdeDim; ++i) y[i] = y0[i] + 0.5 * dt * k1[i];
  const auto k2 = eval(y);
  for (int i = 0; i < PlantState::kOdeDim; ++i) y[i] = y0[i] + 0.5 * dt * k2[i];
  const auto k3 = eval(y);
  for (int i = 0; i < PlantState::kOdeDim; ++i) y[i] = y0[i] + dt * k3[i];
  const auto k4 = eval(y);
  for (int i = 0; i < PlantState::kOdeDim; ++i)
    y[i] = y0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

  for (int i = 0; i < PlantState::kOdeDim; ++i)
    if (!std::isfinite(y[i]))
      throw std::runtime_error(std::string("plant_step: non-finite ") +
                               PlantState::ode_field_name(i));

  PlantState next = state;
  next.set_ode_values(y);
  next.time = state.time + dt;
  return next;
}

double max_abs_deriv(const PlantState& state, const PlantConfig& config) {
  const auto d = plant_derivs(state, config);
  double m = 0.0;
  for (double v : d) m = std::max(m, std::fabs(v));
  return m;
}

PlantState trim(double power_fraction, const PlantConfig& config) {
  if (!(power_fraction >= 0.4 && power_fraction <= 1.05))
    throw std::invalid_argument("trim: power fraction outside [0.4, 1.05]");
  config.validate();

  const double p = power_fraction;
  const double dt_core = config.t_core_out_nom - config.t_core_in_nom;
  const double mdot_p = config.r_p * p / dt_core;
  const double t_out_s = config.t_sink + p / config.k_sg;

  // Secondary flow solves the HX balance
  //   k_hx*(mdot_p*m)^e * (t_core_out_nom - t_in_s(m)) = p
  // with t_in_s(m) = t_out_s - r_s*p/m. F is increasing in m on the
  // physical branch; take the largest root.
  auto F = [&](double m) {
    const double t_in_s = t_out_s - config.r_s * p / m;
    return config.k_hx * std::pow(mdot_p * m, config.flow_exp) *
               (config.t_core_out_nom - t_in_s) -
           p;
  };

  double hi = 1.5;
  if (F(hi) <= 0.0)
    throw std::runtime_error("trim: no steady secondary flow below 1.5, residual " +
                             fmt_g17(F(hi)));
  double lo = hi;
  for (double m = hi - 0.025; m > 1e-3; m -= 0.025) {
    if (F(m) < 0.0) {
      lo = m;
      break;
    }
    hi = m;
  }
  if (lo == 1.5)
    throw std::runtime_error("trim: secondary-flow bracketing failed, residual " +
                             fmt_g17(F(1e-3)));
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (F(mid) < 0.0 ? lo : hi) = mid;
  }
  const double mdot_s = 0.5 * (lo + hi);

  PlantState s;
  s.power = p;
  s.precursor = config.beta * p / (config.lambda_gen * config.lambda_d);
  s.t_core_in = config.t_core_in_nom;
  s.t_core_out = config.t_core_out_nom;
  s.t_hx_s_out = t_out_s;
  s.t_hx_s_in = t_out_s - config.r_s * p / mdot_s;
  s.mdot_p = mdot_p;
  s.mdot_s = mdot_s;
  s.p_core_out = 1.0 + config.k_dp * (mdot_p * mdot_p - 1.0);
  s.q_hx = p;
  s.q_sg = p;
  s.rho_ext = 0.0;
  s.time = 0.0;

  const double residual = max_abs_deriv(s, config);
  if (!(residual < 1e-8))
    throw std::runtime_error("trim: residual " + fmt_g17(residual) + " exceeds 1e-8");
  return s;
}

PidState make_pid(const PidGains& g) {
  PidState p;
  p.kp = g.kp;
  p.ki = g.ki;
  p.kd = g.kd;
  p.out_min = g.out_min;
  p.out_max = g.out_max;
  return p;
}

PidResult pid_step(const PidState& pid, double setpoint, double measurement, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("pid_step: dt must be > 0");

  PidState next = pid;
  const double e = setpoint - measurement;
  const double deriv = pid.kd * (e - pid.prev_error) / dt;

  double integral = pid.integral + e * dt;
  if (pid.ki != 0.0) {
    // keep the integral contribution inside the actuator range
    const double lo = std::min(pid.out_min / pid.ki, pid.out_max / pid.ki);
    const double hi = std::max(pid.out_min / pid.ki, pid.out_max / pid.ki);
    integral = std::clamp(integral, lo, hi);
  }

  double u = pid.kp * e + pid.ki * integral + deriv;
  const double push = pid.ki * e;  // direction the integral term is moving
  if (u > pid.out_max) {
    u = pid.out_max;
    if (push >= 0.0) integral = pid.integral;  // saturated in the same direction
  } else if (u < pid.out_min) {
    u = pid.out_min;
    if (push <= 0.0) integral = pid.integral;
  }

  next.integral = integral;
  next.prev_error = e;
  return {u, next};
}

SupervisoryResult supervisory_step(const PlantState& state, double power_setpoint,
                                   const std::array<PidState, 3>& pids,
                                   const PlantConfig& config, double dt) {
  if (!(power_setpoint >= 0.4 && power_setpoint <= 1.05))
    throw std::invalid_argument("supervisory_step: setpoint outside [0.4, 1.05]");

  auto r0 = pid_step(pids[0], power_setpoint, state.power, dt);
  auto r1 = pid_step(pids[1], config.t_core_out_nom, state.t_core_out, dt);
  auto r2 = pid_step(pids[2], config.t_core_in_nom, state.t_core_in, dt);

  PlantState commanded = state;
  commanded.rho_ext = r0.output;
  commanded.mdot_p = r1.output;
  commanded.mdot_s = r2.output;

  SupervisoryResult out;
  out.state = plant_step(commanded, config, dt);
  out.pids = {r0.pid, r1.pid, r2.pid};
  return out;
}

std::array<PidState, 3> make_supervisory_pids(const PlantConfig& config,
                                              const PlantState& trim_state) {
  auto p0 = make_pid(config.pid_power);
  auto p1 = make_pid(config.pid_mdot_p);
  auto p2 = make_pid(config.pid_mdot_s);
  // bumpless start: integral terms carry the trim actuator values
  if (p0.ki != 0.0) p0.integral = trim_state.rho_ext / p0.ki;
  p1.integral = trim_state.mdot_p / p1.ki;
  p2.integral = trim_state.mdot_s / p2.ki;
  return {p0, p1, p2};
}

const char* const kTrajectoryHeader =
    "time,power,precursor,t_core_in,t_core_out,t_hx_s_in,t_hx_s_out,mdot_p,mdot_s,"
    "p_core_out,q_hx,q_sg,rho_ext,setpoint";

void write_trajectory_csv(const std::string& path, const std::vector<TrajectoryRow>& rows) {
  CsvWriter w(path, split_csv(kTrajectoryHeader));
  for (const auto& r : rows) {
    const auto& s = r.state;
    w.row({s.time, s.power, s.precursor, s.t_core_in, s.t_core_out, s.t_hx_s_in,
           s.t_hx_s_out, s.mdot_p, s.mdot_s, s.p_core_out, s.q_hx, s.q_sg, s.rho_ext,
           r.setpoint});
  }
  w.close();
}

}  // namespace lppo::plant
