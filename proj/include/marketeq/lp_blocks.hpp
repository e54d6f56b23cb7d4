#pragma once

#include <cstddef>
#include <vector>

#include "marketeq/lp_solver.hpp"
#include "marketeq/market_model.hpp"

// Shared builder pieces for programs that embed one agent's utility:
// a bundle block (x >= 0, t free, A x + B t <= b) and a value floor row.

namespace marketeq {

struct UtilityVars {
  std::vector<std::size_t> x;
  std::vector<std::size_t> t;
};

// Adds x/t variables with objective weights scale*q and scale*s plus the
// utility rows. Returns the variable ids for use in further rows.
UtilityVars add_utility_block(lp::LpBuilder& builder, const CplcUtility& u,
                              double x_objective_scale,
                              double t_objective_scale);

// Adds the row q.x + s.t >= level.
void add_value_floor(lp::LpBuilder& builder, const CplcUtility& u,
                     const UtilityVars& vars, double level);

}  // namespace marketeq
