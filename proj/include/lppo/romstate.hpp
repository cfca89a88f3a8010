#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lppo/plant.hpp"

namespace lppo {

/// Order of the reduced-order state vector exposed to identification and
/// to the agent: flows, core temperatures, pressure, secondary-side heat
/// exchanger temperatures, precursor, energy transfer rates.
inline const std::vector<std::string>& rom_state_names() {
  static const std::vector<std::string> names = {
      "mdot_p", "mdot_s", "t_core_in",  "t_core_out", "p_core_out",
      "t_hx_s_in", "t_hx_s_out", "precursor", "q_hx", "q_sg"};
  return names;
}

inline constexpr int kRomStateDim = 10;
inline constexpr int kIdxTHxSIn = 5;
inline constexpr int kIdxTHxSOut = 6;

inline Eigen::VectorXd rom_state_from_plant(const plant::PlantState& s) {
  Eigen::VectorXd x(kRomStateDim);
  x << s.mdot_p, s.mdot_s, s.t_core_in, s.t_core_out, s.p_core_out, s.t_hx_s_in,
      s.t_hx_s_out, s.precursor, s.q_hx, s.q_sg;
  return x;
}

}  // namespace lppo
