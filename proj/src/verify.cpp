#include "marketeq/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace marketeq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Bullets {
  Vec utility_gap;
  Vec budget_excess;
  Vec thrifty_excess;
  double clearing_slack = 0.0;
  double oversupply = -kInf;
  double min_allocation = kInf;
};

// Definition bullets shared by all three models: near-best utilities,
// bounded spending, supplies at most one with little unsold value. wealth
// holds one budget per agent; money_slack is the allowed spending excess.
Bullets measure(const std::vector<CplcUtility>& utilities, const Vec& wealth,
                const Mat& x, const Vec& p, bool thrifty) {
  const std::size_t n = utilities.size();
  const std::size_t m = p.size();
  if (x.size() != n) throw DimensionMismatch("verify: one bundle per agent");

  Bullets out;
  out.utility_gap.resize(n);
  out.budget_excess.resize(n);
  if (thrifty) out.thrifty_excess.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    if (x[i].size() != m) throw DimensionMismatch("verify: bundle width");
    for (const double v : x[i])
      out.min_allocation = std::min(out.min_allocation, v);

    const double spend = dot(p, x[i]);
    out.budget_excess[i] = spend - wealth[i];
    double best = kInf;
    try {
      best = best_value(utilities[i], p, wealth[i]);
    } catch (const UnboundedDemand&) {
      // No finite bundle is near-best when demand is unbounded.
    }
    const double got = eval_utility(utilities[i], x[i]);
    out.utility_gap[i] =
        (best == kInf || got == -kInf) ? kInf : best - got;
    if (thrifty) {
      const double cost =
          best == kInf ? 0.0 : thrifty_cost(utilities[i], p, wealth[i], best);
      out.thrifty_excess[i] = spend - cost;
    }
  }

  for (std::size_t j = 0; j < m; ++j) {
    double taken = 0.0;
    for (std::size_t i = 0; i < n; ++i) taken += x[i][j];
    out.oversupply = std::max(out.oversupply, taken - 1.0);
    out.clearing_slack += p[j] * (1.0 - taken);
  }
  return out;
}

bool shared_verdict(const Bullets& b, double lambda, double money_slack,
                    bool thrifty) {
  for (const double gap : b.utility_gap)
    if (!(gap <= lambda + kVerifyTol)) return false;
  const Vec& excess = thrifty ? b.thrifty_excess : b.budget_excess;
  for (const double e : excess)
    if (!(e <= money_slack + kVerifyTol)) return false;
  return b.oversupply <= kVerifyTol &&
         b.clearing_slack <= money_slack + kVerifyTol &&
         b.min_allocation >= -kVerifyTol;
}

}  // namespace

VerificationReport verify_fisher(const FisherMarket& market, const Mat& x,
                                 const Vec& p, double sigma, double lambda,
                                 bool thrifty) {
  const std::size_t n = market.agents.size();
  if (n == 0) throw EmptyMarket("verify_fisher: no agents");
  if (p.size() != market.num_items)
    throw DimensionMismatch("verify_fisher: price size");

  std::vector<CplcUtility> utilities(n);
  Vec wealth(n);
  for (std::size_t i = 0; i < n; ++i) {
    utilities[i] = market.agents[i].utility;
    wealth[i] = market.agents[i].budget;
  }
  const Bullets b = measure(utilities, wealth, x, p, thrifty);

  VerificationReport report;
  report.utility_gap = b.utility_gap;
  report.budget_excess = b.budget_excess;
  report.thrifty_excess = b.thrifty_excess;
  report.clearing_slack = b.clearing_slack;
  report.oversupply = b.oversupply;
  report.min_allocation = b.min_allocation;
  report.pass =
      shared_verdict(b, lambda, sigma * market.sum_budgets(), thrifty);
  return report;
}

VerificationReport verify_matching(const MatchingMarket& mm, const Mat& x,
                                   const Vec& p, double sigma, double lambda,
                                   bool thrifty) {
  const std::size_t n = mm.utilities.size();
  const std::size_t m = mm.num_items;
  if (n == 0) throw EmptyMarket("verify_matching: no agents");
  if (p.size() != m) throw DimensionMismatch("verify_matching: price size");

  std::vector<CplcUtility> utilities(n);
  for (std::size_t i = 0; i < n; ++i)
    utilities[i] = plc_to_cplc(mm.utilities[i], m, MatchingConstraint::perfect);
  const Bullets b = measure(utilities, Vec(n, 1.0), x, p, thrifty);

  VerificationReport report;
  report.utility_gap = b.utility_gap;
  report.budget_excess = b.budget_excess;
  report.thrifty_excess = b.thrifty_excess;
  report.clearing_slack = b.clearing_slack;
  report.oversupply = b.oversupply;
  report.min_allocation = b.min_allocation;
  report.min_price = *std::min_element(p.begin(), p.end());
  for (std::size_t i = 0; i < n; ++i) {
    double held = 0.0;
    for (const double v : x[i]) held += v;
    report.matching_defect =
        std::max(report.matching_defect, std::abs(held - 1.0));
  }
  report.pass = shared_verdict(b, lambda, sigma * static_cast<double>(n),
                               thrifty) &&
                report.matching_defect <= kVerifyTol &&
                report.min_price <= kVerifyTol;
  return report;
}

VerificationReport verify_ad(const AdMarket& ad, const Mat& x, const Vec& p,
                             double sigma, double lambda) {
  const std::size_t n = ad.agents.size();
  const std::size_t m = ad.num_items;
  if (n == 0) throw EmptyMarket("verify_ad: no agents");
  if (p.size() != m) throw DimensionMismatch("verify_ad: price size");

  std::vector<CplcUtility> utilities(n);
  Vec wealth(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (ad.agents[i].endowment.size() != m)
      throw DimensionMismatch("verify_ad: endowment width");
    utilities[i] =
        plc_to_cplc(ad.agents[i].utility, m, MatchingConstraint::none);
    wealth[i] = dot(p, ad.agents[i].endowment);
  }
  const Bullets b = measure(utilities, wealth, x, p, false);

  VerificationReport report;
  report.utility_gap = b.utility_gap;
  report.budget_excess = b.budget_excess;
  report.clearing_slack = b.clearing_slack;
  report.oversupply = b.oversupply;
  report.min_allocation = b.min_allocation;
  for (const double pj : p) report.price_total += pj;
  // Money slacks are absolute here: incomes already sum to the price total.
  report.pass = shared_verdict(b, lambda, sigma, false) &&
                report.price_total >= 1.0 - kVerifyTol;
  return report;
}

}  // namespace marketeq
