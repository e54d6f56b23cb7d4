#pragma once

#include <cstdint>
#include <optional>

#include "marketeq/market_model.hpp"
#include "marketeq/search_stats.hpp"

namespace marketeq {

// Exchange-market invariants all solvers here rely on: every agent holds a
// positive share of every item and the shares of each item sum to one, piece
// coefficients are nonnegative, and each agent's smallest piece offset is
// exactly zero (so u(0) = 0). Throws MarketError / DimensionMismatch.
void validate_ad_market(const AdMarket& ad);

// Feasibility program at posted prices p. Budgets are endowment incomes
// w_i = p.e_i; each agent must reach best_value(u_i, p, w_i) minus
// delta * m * (m + xi)^2 / xi, spend at most w_i + delta * m, and every item
// clears exactly. Utilities in `ad` are used as given, so robustify before
// calling. Requires sum(p) in [1, 1 + m * delta]. Propagates UnboundedDemand
// when some agent wants an unpriced item. *lp_solves, when given, is
// incremented once per linear program solved.
std::optional<Mat> ad_allocation_program(const AdMarket& ad, const Vec& p,
                                         double delta, double xi,
                                         std::uint64_t* lp_solves = nullptr);

struct AdFixedAgentsOptions {
  double sigma = 0.25;   // target approximation, in (0, 1)
  unsigned threads = 0;  // 0 = one per hardware thread
};

// Guess-per-agent scheme for a constant number of agents: utilities get the
// additive coefficient bump, and the price certificate treats budgets as
// endowment incomes with prices normalized to sum(p) = 1. The candidate is
// checked against the original utilities by the advertised (sigma, lambda).
std::optional<EquilibriumCandidate> solve_ad_fixed_agents(
    const AdMarket& ad, const AdFixedAgentsOptions& opts,
    SearchStats* stats = nullptr);

struct AdFixedItemsOptions {
  double sigma = 0.25;   // target approximation, in (0, 1)
  unsigned threads = 0;  // 0 = one per hardware thread
};

// Price-lattice scheme for a constant number of items: scans p_j = delta*k_j
// over the band 1 <= sum(p) <= 1 + m*delta in lexicographic order and returns
// the first point where the allocation program is feasible. Every piece
// coefficient must lie in [0, 1]. Returned prices satisfy sum(p) >= 1 and are
// strictly positive (a free item would make the bumped demand unbounded).
std::optional<EquilibriumCandidate> solve_ad_fixed_items(
    const AdMarket& ad, const AdFixedItemsOptions& opts,
    SearchStats* stats = nullptr);

}  // namespace marketeq
