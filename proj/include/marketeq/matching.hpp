#pragma once

#include <cstddef>
#include <optional>

#include "marketeq/market_model.hpp"
#include "marketeq/search_stats.hpp"
#include "marketeq/types.hpp"

namespace marketeq {

// Swaps the exactly-one-unit requirement for "at most one unit": same
// pieces, unit budgets. The relaxed utilities vanish at zero, so the Fisher
// schemes apply to the result.
FisherMarket relax_to_partial(const MatchingMarket& mm);

// p_j -> 1 + r (p_j - 1), exact per coordinate. For a one-unit bundle,
// 1 - p'.x = r (1 - p.x), so demand at budget one is unchanged. Throws
// MarketError when r <= 0 and NegativePrice when a price would go below 0.
Vec apply_price_transform(const Vec& p, double r);

struct PriceNormalization {
  Vec p;
  double r = 1.0;        // transform applied; +infinity for the all-ones case
  bool warning = false;  // prices were left untouched (see below)
};

// Largest valid transform sending the minimum price to zero. All-ones input
// maps to all zeros (the limit of the transform). When every price is above
// one and some strictly so, no valid transform reaches zero; the input is
// returned unchanged with the warning set.
PriceNormalization normalize_min_price_zero(const Vec& p);

// Tops up every agent to exactly one unit with unallocated item mass,
// scanning items and agents in ascending index order. Requires a zero
// minimum price and row/column sums at most one; each agent's extra
// spending is then at most the unsold value. Throws SupplyShortfall when
// the mass runs out, which cannot happen with at least as many items as
// agents.
Mat lift_partial_to_perfect(const MatchingMarket& mm, const Mat& x_partial,
                            const Vec& p);

struct MatchingFixedItemsOptions {
  double epsilon = 0.2;  // target approximation, in (0, 1)
  unsigned threads = 0;
};

// Price-grid search on the partial relaxation, restricted to grid points
// holding a zero price, then lifted to a perfect matching. The lift at most
// doubles the spending overshoot, so the candidate advertises
// (2 epsilon, epsilon), thrifty.
std::optional<EquilibriumCandidate> solve_matching_fixed_items(
    const MatchingMarket& mm, const MatchingFixedItemsOptions& opts,
    SearchStats* stats = nullptr);

struct MatchingFixedAgentsOptions {
  double sigma = 0.25;  // target approximation, in (0, 1)
  unsigned threads = 0;
};

// Guess-based scheme on the partial relaxation: for each item in turn, pins
// that price to zero and runs the Fisher guess loop; the first success is
// lifted to a perfect matching. Advertises (2 sigma, min(sigma,
// 2 delta + xi)) with the Fisher scheme's delta and xi, not thrifty.
std::optional<EquilibriumCandidate> solve_matching_fixed_agents(
    const MatchingMarket& mm, const MatchingFixedAgentsOptions& opts,
    SearchStats* stats = nullptr);

// Thrifty scheme for one-piece linear matching utilities (throws NotLinear
// otherwise). Bumps each agent's favourite coefficients by xi = sigma/2,
// guesses values at pitch delta = sigma^2/(4n), pins one item's price to
// zero, and adds per-agent rows keeping spending within n^2 delta / xi of
// every favourite item's price, which makes the certified bundles cheapest
// ones. Lifted output; thrifty.
std::optional<EquilibriumCandidate> solve_hz_thrifty_fixed_agents(
    const MatchingMarket& mm, const MatchingFixedAgentsOptions& opts,
    SearchStats* stats = nullptr);

}  // namespace marketeq
