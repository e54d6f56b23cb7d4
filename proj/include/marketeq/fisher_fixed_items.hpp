#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "marketeq/market_model.hpp"
#include "marketeq/search_stats.hpp"

namespace marketeq {

// Smallest uniform relaxation making prices p consistent with a thrifty
// clearing: minimizes delta such that every agent gets a bundle worth at
// least V_i(p, w_i) - delta costing at most C_i(p, w_i) + delta * sum_w,
// item supplies stay at most one, and unsold value is at most delta * sum_w.
// Returns +inf when some agent's demand at p is unbounded. The minimizing
// allocation is written to *allocation when given; *lp_solves, when given,
// is incremented once per linear program solved.
double residual_program(const FisherMarket& market, const Vec& p,
                        Mat* allocation = nullptr,
                        std::uint64_t* lp_solves = nullptr);

struct FixedItemsOptions {
  double epsilon = 0.1;  // grid pitch and advertised guarantee, in (0, 1)
  unsigned threads = 0;  // 0 = one per hardware thread
  // Optional veto on lattice points, applied before any program is solved.
  std::function<bool(const Vec&)> price_filter;
};

// Scans the lattice p_j = k_j * (epsilon / (2m)) * sum_w, 0 <= k_j <= kmax
// with kmax = floor(2m/epsilon + 1), in lexicographic order, and returns the
// first point whose residual is at most epsilon as an (epsilon, epsilon)
// thrifty candidate. nullopt when every lattice point fails. The returned
// candidate does not depend on the thread count.
std::optional<EquilibriumCandidate> solve_fixed_items(
    const FisherMarket& market, const FixedItemsOptions& opts,
    SearchStats* stats = nullptr);

}  // namespace marketeq
