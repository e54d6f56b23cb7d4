#pragma once

#include "marketeq/market_model.hpp"

namespace marketeq {

// Everything a verdict is based on, recomputed from the instance and the
// candidate alone. Fields that do not apply to a model are left at their
// defaults and ignored by the verdict.
struct VerificationReport {
  Vec utility_gap;      // V_i(p, w_i) - u_i(x_i)
  Vec budget_excess;    // p.x_i - w_i
  Vec thrifty_excess;   // p.x_i - C_i(p, w_i), only filled when requested
  double clearing_slack = 0.0;  // sum_j p_j (1 - sum_i x_ij), unsold value
  double oversupply = 0.0;      // max_j (sum_i x_ij - 1)
  double min_allocation = 0.0;  // most negative x entry
  double matching_defect = 0.0;  // matching: max_i |sum_j x_ij - 1|
  double min_price = 0.0;        // matching: smallest price
  double price_total = 0.0;      // exchange: sum of prices
  bool pass = false;
};

// Every threshold below is widened by this much so solver round-off cannot
// flip a verdict.
inline constexpr double kVerifyTol = 1e-7;

// Checks the candidate against the approximation definition at the given
// levels: utilities within lambda of best affordable, spending at most
// w_i + sigma * sum(w) (or C_i + sigma * sum(w) when thrifty), supplies at
// most one with unsold value at most sigma * sum(w). Values and costs are
// recomputed from the market alone.
VerificationReport verify_fisher(const FisherMarket& market, const Mat& x,
                                 const Vec& p, double sigma, double lambda,
                                 bool thrifty);

// Matching version: budgets are one, utilities are the perfect-matching
// completions, and additionally every agent must hold exactly one unit and
// the cheapest item must be free.
VerificationReport verify_matching(const MatchingMarket& mm, const Mat& x,
                                   const Vec& p, double sigma, double lambda,
                                   bool thrifty);

// Exchange version: budgets are recomputed endowment incomes, the money
// slacks are absolute, and prices must sum to at least one.
VerificationReport verify_ad(const AdMarket& ad, const Mat& x, const Vec& p,
                             double sigma, double lambda);

}  // namespace marketeq
