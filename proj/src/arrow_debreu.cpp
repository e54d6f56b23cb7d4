#include "marketeq/arrow_debreu.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "marketeq/fisher_fixed_agents.hpp"
#include "marketeq/lp_blocks.hpp"
#include "marketeq/lp_solver.hpp"
#include "marketeq/parallel.hpp"
#include "marketeq/robustify.hpp"

namespace marketeq {

using lp::LpBuilder;
using lp::LpStatus;
using lp::Relation;
using lp::Sense;

void validate_ad_market(const AdMarket& ad) {
  const std::size_t m = ad.num_items;
  const std::size_t n = ad.agents.size();
  if (n == 0) throw EmptyMarket("ad market: no agents");
  if (m == 0) throw EmptyMarket("ad market: no items");

  Vec share(m, 0.0);
  for (const auto& agent : ad.agents) {
    if (agent.endowment.size() != m)
      throw DimensionMismatch("ad market: endowment width");
    for (std::size_t j = 0; j < m; ++j) {
      if (!(agent.endowment[j] > 0.0))
        throw MarketError("ad market: endowment shares must be positive");
      share[j] += agent.endowment[j];
    }
    if (agent.utility.pieces.empty())
      throw MarketError("ad market: utility needs at least one piece");
    double min_beta = std::numeric_limits<double>::infinity();
    for (const auto& piece : agent.utility.pieces) {
      if (piece.a.size() != m)
        throw DimensionMismatch("ad market: piece width");
      for (const double c : piece.a)
        if (c < 0.0)
          throw MarketError("ad market: piece coefficients must be >= 0");
      min_beta = std::min(min_beta, piece.beta);
    }
    if (std::abs(min_beta) > 1e-12)
      throw MarketError("ad market: smallest piece offset must be zero");
  }
  // Supplies are one unit per item, so the shares must account for exactly
  // that; otherwise endowment income and market value diverge.
  for (std::size_t j = 0; j < m; ++j)
    if (std::abs(share[j] - 1.0) > 1e-9)
      throw MarketError("ad market: shares of each item must sum to one");
}

std::optional<Mat> ad_allocation_program(const AdMarket& ad, const Vec& p,
                                         double delta, double xi,
                                         std::uint64_t* lp_solves) {
  const std::size_t m = ad.num_items;
  const std::size_t n = ad.agents.size();
  if (n == 0) throw EmptyMarket("ad_allocation_program: no agents");
  if (m == 0) throw EmptyMarket("ad_allocation_program: no items");
  if (p.size() != m)
    throw DimensionMismatch("ad_allocation_program: price size");
  if (!(delta > 0.0) || !(xi > 0.0))
    throw MarketError("ad_allocation_program: delta and xi must be positive");
  double sum_p = 0.0;
  for (const double v : p) {
    if (v < 0.0) throw MarketError("ad_allocation_program: negative price");
    sum_p += v;
  }
  if (sum_p < 1.0 - 1e-9 ||
      sum_p > 1.0 + static_cast<double>(m) * delta + 1e-9)
    throw MarketError("ad_allocation_program: prices outside the unit band");

  auto bump = [&]() {
    if (lp_solves) ++*lp_solves;
  };

  const double gap =
      delta * static_cast<double>(m) * (m + xi) * (m + xi) / xi;
  const double money = static_cast<double>(m) * delta;

  std::vector<CplcUtility> utilities(n);
  std::vector<double> wealth(n), value(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& agent = ad.agents[i];
    if (agent.endowment.size() != m)
      throw DimensionMismatch("ad_allocation_program: endowment width");
    wealth[i] = dot(p, agent.endowment);
    utilities[i] = plc_to_cplc(agent.utility, m, MatchingConstraint::none);
    bump();
    value[i] = best_value(utilities[i], p, wealth[i]);
    if (value[i] == -std::numeric_limits<double>::infinity())
      throw InfeasibleUtility("ad_allocation_program: empty budget set");
  }

  LpBuilder builder(Sense::minimize);
  std::vector<UtilityVars> vars(n);
  for (std::size_t i = 0; i < n; ++i) {
    vars[i] = add_utility_block(builder, utilities[i], 0.0, 0.0);
    add_value_floor(builder, utilities[i], vars[i], value[i] - gap);

    std::vector<std::pair<std::size_t, double>> spend_terms;
    for (std::size_t j = 0; j < m; ++j)
      if (p[j] != 0.0) spend_terms.emplace_back(vars[i].x[j], p[j]);
    builder.add_row(spend_terms, Relation::less_equal, wealth[i] + money);
  }
  // Exchange leaves nothing unsold: every item clears exactly.
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<std::pair<std::size_t, double>> terms;
    for (std::size_t i = 0; i < n; ++i) terms.emplace_back(vars[i].x[j], 1.0);
    builder.add_row(terms, Relation::equal, 1.0);
  }

  bump();
  const auto out = lp::check_feasible(builder.take());
  if (out.status != LpStatus::optimal) return std::nullopt;
  Mat x(n, Vec(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) x[i][j] = out.x[vars[i].x[j]];
  return x;
}

std::optional<EquilibriumCandidate> solve_ad_fixed_agents(
    const AdMarket& ad, const AdFixedAgentsOptions& opts, SearchStats* stats) {
  if (!(opts.sigma > 0.0) || !(opts.sigma < 1.0))
    throw MarketError("solve_ad_fixed_agents: sigma must be in (0, 1)");
  validate_ad_market(ad);

  const std::size_t n = ad.agents.size();
  const std::size_t m = ad.num_items;
  const double delta =
      opts.sigma * opts.sigma / (2.0 * static_cast<double>(n));
  const double xi = opts.sigma / 2.0;

  std::vector<RobustAgent> agents;
  agents.reserve(n);
  std::vector<std::uint64_t> caps(n);
  Mat endowments(n);
  std::uint64_t setup_lps = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const PlcUtility bumped =
        additive_robustify_plc(ad.agents[i].utility, xi, m);
    CplcUtility cplc = plc_to_cplc(bumped, m, MatchingConstraint::none);
    ++setup_lps;
    const double vm = v_max(cplc);
    caps[i] =
        static_cast<std::uint64_t>(std::ceil(vm / delta - 1e-12)) + 1;
    // Income is set by the price rows, the budget field goes unused.
    agents.push_back({0.0, std::move(cplc), vm});
    endowments[i] = ad.agents[i].endowment;
  }

  PriceSystemConfig config;
  config.delta = delta;
  config.xi = xi;
  // Incomes total one because prices are normalized to the unit simplex and
  // each item's shares sum to one.
  config.slack = static_cast<double>(n) * delta / xi;
  config.endowments = &endowments;

  auto found =
      guess_loop(m, agents, caps, {}, config, opts.threads, stats);
  if (stats) stats->lp_count += setup_lps;
  if (!found) return std::nullopt;

  EquilibriumCandidate candidate;
  candidate.x = std::move(found->x);
  candidate.p = std::move(found->p);
  candidate.sigma = opts.sigma;
  candidate.lambda = std::min(opts.sigma, 2.0 * delta + xi);
  candidate.thrifty = false;
  return candidate;
}

namespace {

// Lattice p_j = delta * k_j, 0 <= k_j < radix, thinned to the band
// 1 <= sum(p) <= 1 + m * delta.
struct AdPriceGrid {
  double delta = 0.0;
  std::size_t items = 0;
  std::uint64_t radix = 0;
  std::uint64_t total = 0;

  std::optional<Vec> decode(std::uint64_t index) const {
    Vec p(items);
    std::uint64_t level = 0;
    for (std::size_t j = items; j-- > 0;) {
      const std::uint64_t k = index % radix;
      level += k;
      p[j] = static_cast<double>(k) * delta;
      index /= radix;
    }
    const double sum = static_cast<double>(level) * delta;
    if (sum < 1.0 - 1e-9 ||
        sum > 1.0 + static_cast<double>(items) * delta + 1e-9)
      return std::nullopt;
    return p;
  }
};

AdPriceGrid make_ad_grid(std::size_t m, double delta) {
  AdPriceGrid grid;
  grid.delta = delta;
  grid.items = m;
  grid.radix =
      static_cast<std::uint64_t>(std::ceil(1.0 / delta - 1e-12)) + 2;
  grid.total = 1;
  for (std::size_t j = 0; j < m; ++j) {
    if (grid.total > (std::uint64_t{1} << 62) / grid.radix)
      throw MarketError("price lattice too large to enumerate");
    grid.total *= grid.radix;
  }
  return grid;
}

}  // namespace

std::optional<EquilibriumCandidate> solve_ad_fixed_items(
    const AdMarket& ad, const AdFixedItemsOptions& opts, SearchStats* stats) {
  if (!(opts.sigma > 0.0) || !(opts.sigma < 1.0))
    throw MarketError("solve_ad_fixed_items: sigma must be in (0, 1)");
  validate_ad_market(ad);
  for (const auto& agent : ad.agents)
    for (const auto& piece : agent.utility.pieces)
      for (const double c : piece.a)
        if (c > 1.0 + 1e-12)
          throw MarketError(
              "solve_ad_fixed_items: piece coefficients must be <= 1");

  const std::size_t m = ad.num_items;
  const double md = static_cast<double>(m);
  const double delta = opts.sigma * opts.sigma / (12.0 * md * md * md);
  const double xi = opts.sigma / 2.0;

  AdMarket robust = ad;
  for (auto& agent : robust.agents)
    agent.utility = additive_robustify_plc(agent.utility, xi, m);

  const AdPriceGrid grid = make_ad_grid(m, delta);
  if (stats) stats->grid_points = grid.total;

  std::atomic<std::uint64_t> lp_count{0};
  std::atomic<std::uint64_t> probes{0};

  auto probe = [&](std::uint64_t index) {
    const auto p = grid.decode(index);
    if (!p) return false;
    probes.fetch_add(1, std::memory_order_relaxed);
    std::uint64_t solves = 0;
    bool feasible = false;
    try {
      feasible = ad_allocation_program(robust, *p, delta, xi, &solves)
                     .has_value();
    } catch (const UnboundedDemand&) {
      // Some item is free and the bumped utilities always want more of it.
    }
    lp_count.fetch_add(solves, std::memory_order_relaxed);
    return feasible;
  };

  const auto hit = first_success(grid.total, opts.threads, probe);
  if (stats) stats->probes = probes.load();
  if (!hit) {
    if (stats) stats->lp_count = lp_count.load();
    return std::nullopt;
  }

  // Re-solve the winner on this thread so the allocation is identical no
  // matter how many workers scanned the lattice.
  const auto p = grid.decode(*hit);
  if (!p) throw MarketError("solve_ad_fixed_items: winner failed to rebuild");
  std::uint64_t solves = 0;
  auto x = ad_allocation_program(robust, *p, delta, xi, &solves);
  lp_count.fetch_add(solves, std::memory_order_relaxed);
  if (!x) throw MarketError("solve_ad_fixed_items: winner failed to rebuild");
  if (stats) stats->lp_count = lp_count.load();

  EquilibriumCandidate candidate;
  candidate.x = std::move(*x);
  candidate.p = *p;
  candidate.sigma = std::min(opts.sigma, md * delta);
  candidate.lambda = std::min(opts.sigma, xi + delta * md * (md + xi) *
                                                   (md + xi) / xi);
  candidate.thrifty = false;
  return candidate;
}

}  // namespace marketeq
