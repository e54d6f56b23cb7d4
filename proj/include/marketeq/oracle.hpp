#pragma once

#include <functional>

#include "marketeq/market_model.hpp"

namespace marketeq {

struct OracleResult {
  Vec p;           // best grid point
  double residual = 0.0;  // smallest uniform relaxation at that point
  Mat x;           // minimizing allocation there
};

// Exhaustive ground truth: evaluates the residual program at every lattice
// point p_j = k * step with prices up to one step past the money supply
// (a sold item can never cost more than all the money), and returns the
// first global minimizer. An optional filter skips lattice points before
// any program is solved. Cost grows as (sum(w)/step)^m, so keep m small.
OracleResult oracle_grid_search(
    const FisherMarket& market, double step,
    const std::function<bool(const Vec&)>& filter = {});

// A three-agent matching market whose equilibria do not form a convex set:
// both listed candidates are exact thrifty matching equilibria, yet the
// midpoint of their prices admits no equilibrium allocation and the
// midpoint of their allocations admits no supporting prices.
struct NonconvexityFixture {
  MatchingMarket market;
  EquilibriumCandidate low;    // prices (0, 1, 2)
  EquilibriumCandidate high;   // prices (0, 0, 3)
  Vec midpoint_price;          // (0, 0.5, 2.5), not an equilibrium price
  Mat midpoint_allocation;     // averaged allocations, not supportable
};

NonconvexityFixture nonconvexity_fixture();

}  // namespace marketeq
