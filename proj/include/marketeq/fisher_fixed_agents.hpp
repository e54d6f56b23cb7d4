#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "marketeq/lp_solver.hpp"
#include "marketeq/market_model.hpp"
#include "marketeq/search_stats.hpp"

namespace marketeq {

// One agent as the guess-based schemes see it: the (already robustified)
// utility to certify against, the money at hand, and the value cap used by
// the row coupling money to the certificate scale.
struct RobustAgent {
  double budget = 1.0;
  CplcUtility utility;
  double vmax_robust = 1.0;
};

// Additional linear row over the price variables.
struct ExtraRow {
  Vec p_coeffs;
  lp::Relation rel = lp::Relation::less_equal;
  double rhs = 0.0;
};

struct PriceSystemConfig {
  double delta = 0.0;  // guess granularity, utility units
  double xi = 0.0;     // robustness amount, utility units
  double slack = 0.0;  // money units; n*delta*sum_w/xi for the base scheme
  std::vector<ExtraRow> extra_rows;
  // Rows that depend on the allocation found for the current guess.
  std::function<std::vector<ExtraRow>(const Mat&)> dynamic_rows;
  // When set (one income vector per agent), budgets become variables w_i
  // tied to endowment income p.e_i and prices are pinned to sum one.
  const Mat* endowments = nullptr;
};

// Feasibility of: every agent reaches its guessed value under unit supply.
// Returns a witness allocation, or nullopt.
std::optional<Mat> allocation_for_guess(std::size_t num_items,
                                        const std::vector<RobustAgent>& agents,
                                        const Vec& guesses);

struct PriceSystemOutcome {
  Vec p;
  Vec w;  // money per agent; echoes budgets unless endowments are set
};

// Feasibility of the certificate system at allocation x: per agent, scaled
// duals (gamma_i, beta_i) witnessing that no affordable bundle beats the
// guess by more than 2*delta, plus spending and unsold-value caps of
// config.slack and any extra rows. Returns a witness, or nullopt.
std::optional<PriceSystemOutcome> price_system(
    std::size_t num_items, const std::vector<RobustAgent>& agents,
    const Vec& guesses, const Mat& x, const PriceSystemConfig& config);

// The shared guess loop: lattice of value guesses u_i = k_i * delta with
// floors[i] <= k_i <= caps[i] (floors empty means all zero), scanned in
// lexicographic order; a point succeeds when the allocation and price
// programs are both feasible. Deterministic for every thread count.
struct GuessLoopResult {
  Mat x;
  Vec p;
  Vec w;
  Vec guesses;
};
std::optional<GuessLoopResult> guess_loop(
    std::size_t num_items, const std::vector<RobustAgent>& agents,
    const std::vector<std::uint64_t>& caps,
    const std::vector<std::uint64_t>& floors, const PriceSystemConfig& config,
    unsigned threads, SearchStats* stats = nullptr);

struct FixedAgentsOptions {
  double sigma = 0.25;  // target approximation, in (0, 1)
  unsigned threads = 0;
  // Extensions threaded through to the price system.
  std::vector<ExtraRow> extra_rows;
  std::function<std::vector<ExtraRow>(const Mat&)> dynamic_rows;
  // Items whose price is pinned to zero (adds the equality rows). Each such
  // item lets an agent grab its full unit for free, so guesses below that
  // value can never be certified; the loop skips them.
  std::vector<std::size_t> zero_price_items;
};

// Guess-and-certify scheme: robustifies each utility by xi = sigma/2,
// enumerates value guesses at pitch delta = sigma^2/(2n), and returns the
// first certified pair as a (sigma, min(sigma, 2*delta + xi)) candidate
// (not thrifty). nullopt when no guess is accepted.
std::optional<EquilibriumCandidate> solve_fixed_agents(
    const FisherMarket& market, const FixedAgentsOptions& opts,
    SearchStats* stats = nullptr);

}  // namespace marketeq
