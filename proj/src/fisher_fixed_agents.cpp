#include "marketeq/fisher_fixed_agents.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <utility>

#include "marketeq/lp_blocks.hpp"
#include "marketeq/parallel.hpp"
#include "marketeq/robustify.hpp"

namespace marketeq {

using lp::LpBuilder;
using lp::LpStatus;
using lp::Relation;
using lp::Sense;
using lp::VarDomain;

std::optional<Mat> allocation_for_guess(std::size_t num_items,
                                        const std::vector<RobustAgent>& agents,
                                        const Vec& guesses) {
  const std::size_t n = agents.size();
  if (guesses.size() != n)
    throw DimensionMismatch("allocation_for_guess: one guess per agent");
  if (n == 0) throw EmptyMarket("allocation_for_guess: no agents");

  LpBuilder builder(Sense::minimize);
  std::vector<UtilityVars> vars(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& u = agents[i].utility;
    if (u.num_items() != num_items)
      throw DimensionMismatch("allocation_for_guess: utility item count");
    vars[i] = add_utility_block(builder, u, 0.0, 0.0);
    add_value_floor(builder, u, vars[i], guesses[i]);
  }
  for (std::size_t j = 0; j < num_items; ++j) {
    std::vector<std::pair<std::size_t, double>> terms;
    for (std::size_t i = 0; i < n; ++i) terms.emplace_back(vars[i].x[j], 1.0);
    builder.add_row(terms, Relation::less_equal, 1.0);
  }

  const auto out = lp::check_feasible(builder.take());
  if (out.status != LpStatus::optimal) return std::nullopt;
  Mat x(n, Vec(num_items, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < num_items; ++j) x[i][j] = out.x[vars[i].x[j]];
  return x;
}

std::optional<PriceSystemOutcome> price_system(
    std::size_t num_items, const std::vector<RobustAgent>& agents,
    const Vec& guesses, const Mat& x, const PriceSystemConfig& config) {
  const std::size_t n = agents.size();
  if (guesses.size() != n || x.size() != n)
    throw DimensionMismatch("price_system: guesses/allocation per agent");
  if (!(config.delta > 0.0) || !(config.xi > 0.0))
    throw MarketError("price_system: delta and xi must be positive");
  const bool endogenous = config.endowments != nullptr;
  if (endogenous && config.endowments->size() != n)
    throw DimensionMismatch("price_system: one endowment per agent");

  LpBuilder builder(Sense::minimize);
  std::vector<std::size_t> p(num_items);
  for (std::size_t j = 0; j < num_items; ++j) p[j] = builder.add_var(0.0);
  std::vector<std::size_t> w(n);
  if (endogenous)
    for (std::size_t i = 0; i < n; ++i) w[i] = builder.add_var(0.0);

  for (std::size_t i = 0; i < n; ++i) {
    const auto& u = agents[i].utility;
    if (u.num_items() != num_items)
      throw DimensionMismatch("price_system: utility item count");
    if (x[i].size() != num_items)
      throw DimensionMismatch("price_system: allocation width");
    const std::size_t rows = u.num_rows();
    std::vector<std::size_t> gamma(rows);
    for (std::size_t r = 0; r < rows; ++r) gamma[r] = builder.add_var(0.0);
    const std::size_t beta = builder.add_var(0.0);
    const double wealth = agents[i].budget;

    // dual objective small: b.gamma + w <= beta * (guess + 2 delta)
    {
      std::vector<std::pair<std::size_t, double>> terms;
      for (std::size_t r = 0; r < rows; ++r)
        if (u.b[r] != 0.0) terms.emplace_back(gamma[r], u.b[r]);
      terms.emplace_back(beta, -(guesses[i] + 2.0 * config.delta));
      if (endogenous) {
        terms.emplace_back(w[i], 1.0);
        builder.add_row(terms, Relation::less_equal, 0.0);
      } else {
        builder.add_row(terms, Relation::less_equal, -wealth);
      }
    }
    // dual feasibility on bundle coordinates: A^T gamma + p >= beta q
    for (std::size_t j = 0; j < num_items; ++j) {
      std::vector<std::pair<std::size_t, double>> terms;
      for (std::size_t r = 0; r < rows; ++r)
        if (u.A[r][j] != 0.0) terms.emplace_back(gamma[r], u.A[r][j]);
      terms.emplace_back(p[j], 1.0);
      if (u.q[j] != 0.0) terms.emplace_back(beta, -u.q[j]);
      builder.add_row(terms, Relation::greater_equal, 0.0);
    }
    // dual feasibility on helper coordinates: B^T gamma = beta s
    for (std::size_t k = 0; k < u.num_aux(); ++k) {
      std::vector<std::pair<std::size_t, double>> terms;
      for (std::size_t r = 0; r < rows; ++r)
        if (u.B[r][k] != 0.0) terms.emplace_back(gamma[r], u.B[r][k]);
      if (u.s[k] != 0.0) terms.emplace_back(beta, -u.s[k]);
      builder.add_row(terms, Relation::equal, 0.0);
    }
    // money stays on the certificate scale: w <= beta * vmax
    {
      std::vector<std::pair<std::size_t, double>> terms;
      terms.emplace_back(beta, -agents[i].vmax_robust);
      if (endogenous) {
        terms.emplace_back(w[i], 1.0);
        builder.add_row(terms, Relation::less_equal, 0.0);
      } else {
        builder.add_row(terms, Relation::less_equal, -wealth);
      }
    }
    // spending cap: p.x_i <= w + slack
    {
      std::vector<std::pair<std::size_t, double>> terms;
      for (std::size_t j = 0; j < num_items; ++j)
        if (x[i][j] != 0.0) terms.emplace_back(p[j], x[i][j]);
      if (endogenous) {
        terms.emplace_back(w[i], -1.0);
        builder.add_row(terms, Relation::less_equal, config.slack);
      } else {
        builder.add_row(terms, Relation::less_equal, wealth + config.slack);
      }
    }
    // endowment income defines the budget: p.e_i = w_i
    if (endogenous) {
      const Vec& e = (*config.endowments)[i];
      if (e.size() != num_items)
        throw DimensionMismatch("price_system: endowment width");
      std::vector<std::pair<std::size_t, double>> terms;
      for (std::size_t j = 0; j < num_items; ++j)
        if (e[j] != 0.0) terms.emplace_back(p[j], e[j]);
      terms.emplace_back(w[i], -1.0);
      builder.add_row(terms, Relation::equal, 0.0);
    }
  }

  // unsold value cap: sum_j p_j (1 - sum_i x_ij) <= slack
  {
    std::vector<std::pair<std::size_t, double>> terms;
    for (std::size_t j = 0; j < num_items; ++j) {
      double leftover = 1.0;
      for (std::size_t i = 0; i < n; ++i) leftover -= x[i][j];
      if (leftover != 0.0) terms.emplace_back(p[j], leftover);
    }
    builder.add_row(terms, Relation::less_equal, config.slack);
  }
  if (endogenous) {
    std::vector<std::pair<std::size_t, double>> terms;
    for (std::size_t j = 0; j < num_items; ++j) terms.emplace_back(p[j], 1.0);
    builder.add_row(terms, Relation::equal, 1.0);
  }

  auto add_extra = [&](const ExtraRow& row) {
    if (row.p_coeffs.size() != num_items)
      throw DimensionMismatch("price_system: extra row width");
    std::vector<std::pair<std::size_t, double>> terms;
    for (std::size_t j = 0; j < num_items; ++j)
      if (row.p_coeffs[j] != 0.0) terms.emplace_back(p[j], row.p_coeffs[j]);
    builder.add_row(terms, row.rel, row.rhs);
  };
  for (const auto& row : config.extra_rows) add_extra(row);
  if (config.dynamic_rows)
    for (const auto& row : config.dynamic_rows(x)) add_extra(row);

  const auto out = lp::check_feasible(builder.take());
  if (out.status != LpStatus::optimal) return std::nullopt;
  PriceSystemOutcome result;
  result.p.resize(num_items);
  for (std::size_t j = 0; j < num_items; ++j) result.p[j] = out.x[p[j]];
  result.w.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    result.w[i] = endogenous ? out.x[w[i]] : agents[i].budget;
  return result;
}

namespace {

Vec decode_guesses(std::uint64_t index, const std::vector<std::uint64_t>& caps,
                   const std::vector<std::uint64_t>& floors, double delta) {
  Vec guesses(caps.size());
  for (std::size_t i = caps.size(); i-- > 0;) {
    const std::uint64_t radix = caps[i] - floors[i] + 1;
    guesses[i] = static_cast<double>(floors[i] + index % radix) * delta;
    index /= radix;
  }
  return guesses;
}

}  // namespace

std::optional<GuessLoopResult> guess_loop(
    std::size_t num_items, const std::vector<RobustAgent>& agents,
    const std::vector<std::uint64_t>& caps,
    const std::vector<std::uint64_t>& floors, const PriceSystemConfig& config,
    unsigned threads, SearchStats* stats) {
  if (caps.size() != agents.size())
    throw DimensionMismatch("guess_loop: one cap per agent");
  std::vector<std::uint64_t> lows = floors;
  if (lows.empty()) lows.assign(caps.size(), 0);
  if (lows.size() != caps.size())
    throw DimensionMismatch("guess_loop: one floor per agent");
  for (std::size_t i = 0; i < caps.size(); ++i)
    lows[i] = std::min(lows[i], caps[i]);

  std::uint64_t total = 1;
  for (std::size_t i = 0; i < caps.size(); ++i) {
    const std::uint64_t radix = caps[i] - lows[i] + 1;
    if (total > (std::uint64_t{1} << 62) / radix)
      throw MarketError("guess lattice too large to enumerate");
    total *= radix;
  }
  if (stats) stats->grid_points = total;

  std::atomic<std::uint64_t> lp_count{0};
  std::atomic<std::uint64_t> probes{0};

  auto probe = [&](std::uint64_t index) {
    const Vec guesses = decode_guesses(index, caps, lows, config.delta);
    probes.fetch_add(1, std::memory_order_relaxed);
    lp_count.fetch_add(1, std::memory_order_relaxed);
    const auto x = allocation_for_guess(num_items, agents, guesses);
    if (!x) return false;
    lp_count.fetch_add(1, std::memory_order_relaxed);
    return price_system(num_items, agents, guesses, *x, config).has_value();
  };

  const auto hit = first_success(total, threads, probe);
  if (stats) {
    stats->probes = probes.load();
    stats->lp_count = lp_count.load();
  }
  if (!hit) return std::nullopt;

  // Deterministic rebuild of the winner, independent of the thread count.
  GuessLoopResult result;
  result.guesses = decode_guesses(*hit, caps, lows, config.delta);
  auto x = allocation_for_guess(num_items, agents, result.guesses);
  if (!x) throw MarketError("guess_loop: winner failed to rebuild");
  auto prices = price_system(num_items, agents, result.guesses, *x, config);
  if (!prices) throw MarketError("guess_loop: winner failed to rebuild");
  if (stats) stats->lp_count += 2;
  result.x = std::move(*x);
  result.p = std::move(prices->p);
  result.w = std::move(prices->w);
  return result;
}

std::optional<EquilibriumCandidate> solve_fixed_agents(
    const FisherMarket& market, const FixedAgentsOptions& opts,
    SearchStats* stats) {
  if (!(opts.sigma > 0.0) || !(opts.sigma < 1.0))
    throw MarketError("solve_fixed_agents: sigma must be in (0, 1)");
  const std::size_t n = market.agents.size();
  if (n == 0) throw EmptyMarket("solve_fixed_agents: no agents");
  if (market.num_items == 0)
    throw EmptyMarket("solve_fixed_agents: no items");
  const double sum_w = market.sum_budgets();
  if (!(sum_w > 0.0))
    throw MarketError("solve_fixed_agents: total budget must be positive");

  const double delta =
      opts.sigma * opts.sigma / (2.0 * static_cast<double>(n));
  const double xi = opts.sigma / 2.0;

  for (const std::size_t j : opts.zero_price_items)
    if (j >= market.num_items)
      throw DimensionMismatch("solve_fixed_agents: zero-price item index");

  std::vector<RobustAgent> agents;
  agents.reserve(n);
  std::vector<std::uint64_t> caps(n);
  std::vector<std::uint64_t> floors(n, 0);
  std::uint64_t setup_lps = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& agent = market.agents[i];
    ++setup_lps;
    const double vm = v_max(agent.utility);
    auto robust = perspective_robustify(agent.utility, xi, vm);
    caps[i] = static_cast<std::uint64_t>(
                  std::ceil(robust.vmax() / delta - 1e-12)) +
              1;
    // A free item puts its full unit within every budget, so no guess below
    // that utility level can pass the certificate. Start the lattice there.
    for (const std::size_t j : opts.zero_price_items) {
      Vec unit(market.num_items, 0.0);
      unit[j] = 1.0;
      ++setup_lps;
      const double reach = eval_utility(robust.utility, unit);
      if (reach > 0.0) {
        const auto steps = static_cast<std::uint64_t>(
            std::max(0.0, std::floor(reach / delta) - 2.0));
        floors[i] = std::max(floors[i], std::min(steps, caps[i]));
      }
    }
    agents.push_back({agent.budget, std::move(robust.utility), robust.vmax()});
  }

  PriceSystemConfig config;
  config.delta = delta;
  config.xi = xi;
  config.slack = static_cast<double>(n) * delta * sum_w / xi;
  config.extra_rows = opts.extra_rows;
  config.dynamic_rows = opts.dynamic_rows;
  for (const std::size_t j : opts.zero_price_items) {
    ExtraRow row;
    row.p_coeffs.assign(market.num_items, 0.0);
    row.p_coeffs[j] = 1.0;
    row.rel = Relation::equal;
    row.rhs = 0.0;
    config.extra_rows.push_back(std::move(row));
  }

  auto found = guess_loop(market.num_items, agents, caps, floors, config,
                          opts.threads, stats);
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

}  // namespace marketeq
