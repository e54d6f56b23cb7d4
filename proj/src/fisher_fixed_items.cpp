#include "marketeq/fisher_fixed_items.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "marketeq/lp_blocks.hpp"
#include "marketeq/lp_solver.hpp"
#include "marketeq/parallel.hpp"

namespace marketeq {

using lp::LpBuilder;
using lp::LpStatus;
using lp::Relation;
using lp::Sense;

double residual_program(const FisherMarket& market, const Vec& p,
                        Mat* allocation, std::uint64_t* lp_solves) {
  const std::size_t m = market.num_items;
  const std::size_t n = market.agents.size();
  if (p.size() != m)
    throw DimensionMismatch("residual_program: price size mismatch");
  if (n == 0) throw EmptyMarket("residual_program: no agents");
  const double sum_w = market.sum_budgets();
  if (!(sum_w > 0.0))
    throw MarketError("residual_program: total budget must be positive");

  auto bump = [&]() {
    if (lp_solves) ++*lp_solves;
  };

  std::vector<double> value(n), cost(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& agent = market.agents[i];
    bump();
    try {
      value[i] = best_value(agent.utility, p, agent.budget);
    } catch (const UnboundedDemand&) {
      return std::numeric_limits<double>::infinity();
    }
    if (value[i] == -std::numeric_limits<double>::infinity())
      throw InfeasibleUtility("residual_program: agent " + std::to_string(i) +
                              " has an empty budget set");
    bump();
    cost[i] = thrifty_cost(agent.utility, p, agent.budget, value[i]);
  }

  LpBuilder builder(Sense::minimize);
  const std::size_t delta = builder.add_var(1.0);
  std::vector<UtilityVars> vars(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& u = market.agents[i].utility;
    vars[i] = add_utility_block(builder, u, 0.0, 0.0);

    std::vector<std::pair<std::size_t, double>> floor_terms;
    for (std::size_t j = 0; j < m; ++j)
      if (u.q[j] != 0.0) floor_terms.emplace_back(vars[i].x[j], u.q[j]);
    for (std::size_t k = 0; k < u.num_aux(); ++k)
      if (u.s[k] != 0.0) floor_terms.emplace_back(vars[i].t[k], u.s[k]);
    floor_terms.emplace_back(delta, 1.0);
    builder.add_row(floor_terms, Relation::greater_equal, value[i]);

    std::vector<std::pair<std::size_t, double>> spend_terms;
    for (std::size_t j = 0; j < m; ++j)
      if (p[j] != 0.0) spend_terms.emplace_back(vars[i].x[j], p[j]);
    spend_terms.emplace_back(delta, -sum_w);
    builder.add_row(spend_terms, Relation::less_equal, cost[i]);
  }
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<std::pair<std::size_t, double>> supply_terms;
    for (std::size_t i = 0; i < n; ++i)
      supply_terms.emplace_back(vars[i].x[j], 1.0);
    builder.add_row(supply_terms, Relation::less_equal, 1.0);
  }
  {
    double all_items = 0.0;
    std::vector<std::pair<std::size_t, double>> unsold_terms;
    for (std::size_t j = 0; j < m; ++j) {
      all_items += p[j];
      if (p[j] == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i)
        unsold_terms.emplace_back(vars[i].x[j], -p[j]);
    }
    unsold_terms.emplace_back(delta, -sum_w);
    builder.add_row(unsold_terms, Relation::less_equal, -all_items);
  }

  bump();
  const auto out = lp::solve_lp(builder.take());
  if (out.status != LpStatus::optimal)
    throw MarketError("residual_program: relaxation should never fail");
  if (allocation) {
    allocation->assign(n, Vec(m, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j)
        (*allocation)[i][j] = out.x[vars[i].x[j]];
  }
  return out.objective;
}

namespace {

struct PriceGrid {
  double step = 0.0;
  std::size_t items = 0;
  std::uint64_t radix = 0;
  std::uint64_t total = 0;

  Vec decode(std::uint64_t index) const {
    Vec p(items);
    for (std::size_t j = items; j-- > 0;) {
      p[j] = static_cast<double>(index % radix) * step;
      index /= radix;
    }
    return p;
  }
};

PriceGrid make_grid(std::size_t m, double epsilon, double sum_w) {
  PriceGrid grid;
  grid.items = m;
  grid.step = epsilon * sum_w / (2.0 * static_cast<double>(m));
  const double kmax =
      std::floor(2.0 * static_cast<double>(m) / epsilon + 1.0 + 1e-12);
  grid.radix = static_cast<std::uint64_t>(kmax) + 1;
  grid.total = 1;
  for (std::size_t j = 0; j < m; ++j) {
    if (grid.total > (std::uint64_t{1} << 62) / grid.radix)
      throw MarketError("price lattice too large to enumerate");
    grid.total *= grid.radix;
  }
  return grid;
}

}  // namespace

std::optional<EquilibriumCandidate> solve_fixed_items(
    const FisherMarket& market, const FixedItemsOptions& opts,
    SearchStats* stats) {
  if (!(opts.epsilon > 0.0) || !(opts.epsilon < 1.0))
    throw MarketError("solve_fixed_items: epsilon must be in (0, 1)");
  if (market.num_items == 0)
    throw EmptyMarket("solve_fixed_items: no items");
  if (market.agents.empty())
    throw EmptyMarket("solve_fixed_items: no agents");
  const double sum_w = market.sum_budgets();
  if (!(sum_w > 0.0))
    throw MarketError("solve_fixed_items: total budget must be positive");

  const PriceGrid grid = make_grid(market.num_items, opts.epsilon, sum_w);
  if (stats) stats->grid_points = grid.total;

  const double accept = opts.epsilon + lp::kFeasTol;
  std::atomic<std::uint64_t> lp_count{0};
  std::atomic<std::uint64_t> probes{0};

  auto probe = [&](std::uint64_t index) {
    const Vec p = grid.decode(index);
    if (opts.price_filter && !opts.price_filter(p)) return false;
    probes.fetch_add(1, std::memory_order_relaxed);
    std::uint64_t solves = 0;
    const double residual = residual_program(market, p, nullptr, &solves);
    lp_count.fetch_add(solves, std::memory_order_relaxed);
    return residual <= accept;
  };

  const auto hit = first_success(grid.total, opts.threads, probe);
  if (stats) stats->probes = probes.load();
  if (!hit) {
    if (stats) stats->lp_count = lp_count.load();
    return std::nullopt;
  }

  // Re-solve the winning point on this thread so the reported allocation is
  // identical no matter how many workers scanned the lattice.
  EquilibriumCandidate candidate;
  candidate.p = grid.decode(*hit);
  std::uint64_t solves = 0;
  residual_program(market, candidate.p, &candidate.x, &solves);
  lp_count.fetch_add(solves, std::memory_order_relaxed);
  candidate.sigma = opts.epsilon;
  candidate.lambda = opts.epsilon;
  candidate.thrifty = true;
  if (stats) stats->lp_count = lp_count.load();
  return candidate;
}

}  // namespace marketeq
