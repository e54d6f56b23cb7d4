#include "marketeq/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "marketeq/fisher_fixed_agents.hpp"
#include "marketeq/fisher_fixed_items.hpp"
#include "marketeq/lp_solver.hpp"
#include "marketeq/robustify.hpp"

namespace marketeq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_matching(const MatchingMarket& mm) {
  const std::size_t n = mm.utilities.size();
  if (n == 0) throw EmptyMarket("matching market: no agents");
  if (mm.num_items < n)
    throw MarketError("matching market: fewer items than agents");
  for (const auto& plc : mm.utilities) {
    if (plc.pieces.empty())
      throw MarketError("matching market: utility with no pieces");
    for (const auto& piece : plc.pieces)
      if (piece.a.size() != mm.num_items)
        throw DimensionMismatch("matching market: piece width");
  }
}

}  // namespace

FisherMarket relax_to_partial(const MatchingMarket& mm) {
  validate_matching(mm);
  FisherMarket fisher;
  fisher.num_items = mm.num_items;
  fisher.agents.reserve(mm.utilities.size());
  for (const auto& plc : mm.utilities)
    fisher.agents.push_back(
        {1.0, plc_to_cplc(plc, mm.num_items, MatchingConstraint::partial)});
  return fisher;
}

Vec apply_price_transform(const Vec& p, double r) {
  if (!(r > 0.0))
    throw MarketError("apply_price_transform: r must be positive");
  Vec out(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double v = 1.0 + r * (p[j] - 1.0);
    if (v < -1e-9 * (1.0 + r))
      throw NegativePrice("apply_price_transform: price driven below zero");
    out[j] = std::max(v, 0.0);
  }
  return out;
}

PriceNormalization normalize_min_price_zero(const Vec& p) {
  if (p.empty()) throw EmptyMarket("normalize_min_price_zero: no prices");
  for (const double v : p)
    if (v < -lp::kFeasTol)
      throw MarketError("normalize_min_price_zero: negative price");

  PriceNormalization out;
  bool all_one = true;
  double min_p = kInf;
  for (const double v : p) {
    all_one = all_one && std::abs(v - 1.0) <= lp::kFeasTol;
    min_p = std::min(min_p, v);
  }
  if (all_one) {
    // No finite transform moves prices pinned at one; the equilibrium at
    // all-ones is also one at all-zeros, so jump to the limit directly.
    out.p.assign(p.size(), 0.0);
    out.r = kInf;
    return out;
  }
  if (min_p < 1.0) {
    out.r = 1.0 / (1.0 - min_p);
    out.p = apply_price_transform(p, out.r);
    for (double& v : out.p)
      if (v <= 1e-12) v = 0.0;
    return out;
  }
  // Every price is at least one and some exceed it: scaling up only moves
  // prices away from zero, scaling down never reaches it. Leave unchanged.
  out.p = p;
  out.warning = true;
  return out;
}

Mat lift_partial_to_perfect(const MatchingMarket& mm, const Mat& x_partial,
                            const Vec& p) {
  validate_matching(mm);
  const std::size_t n = mm.utilities.size();
  const std::size_t m = mm.num_items;
  if (x_partial.size() != n)
    throw DimensionMismatch("lift: one allocation row per agent");
  if (p.size() != m) throw DimensionMismatch("lift: price width");

  double min_p = kInf;
  for (const double v : p) min_p = std::min(min_p, v);
  if (!(min_p <= lp::kFeasTol))
    throw MarketError("lift: requires a zero minimum price");

  Mat x = x_partial;
  Vec deficit(n);
  Vec leftover(m, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i].size() != m) throw DimensionMismatch("lift: allocation width");
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (x[i][j] < -1e-9) throw MarketError("lift: negative allocation");
      row += x[i][j];
      leftover[j] -= x[i][j];
    }
    if (row > 1.0 + 1e-7) throw MarketError("lift: agent holds over one unit");
    deficit[i] = std::max(0.0, 1.0 - row);
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (leftover[j] < -1e-7) throw MarketError("lift: item oversold");
    leftover[j] = std::max(0.0, leftover[j]);
  }

  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n && leftover[j] > 0.0; ++i) {
      const double take = std::min(deficit[i], leftover[j]);
      if (take <= 0.0) continue;
      x[i][j] += take;
      deficit[i] -= take;
      leftover[j] -= take;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (deficit[i] > 1e-7)
      throw SupplyShortfall("lift: ran out of item mass");
  return x;
}

std::optional<EquilibriumCandidate> solve_matching_fixed_items(
    const MatchingMarket& mm, const MatchingFixedItemsOptions& opts,
    SearchStats* stats) {
  const FisherMarket fisher = relax_to_partial(mm);

  FixedItemsOptions inner;
  inner.epsilon = opts.epsilon;
  inner.threads = opts.threads;
  // Only price vectors touching zero can extend to the one-unit market.
  inner.price_filter = [](const Vec& p) {
    for (const double v : p)
      if (v == 0.0) return true;
    return false;
  };

  auto got = solve_fixed_items(fisher, inner, stats);
  if (!got) return std::nullopt;

  EquilibriumCandidate out;
  out.x = lift_partial_to_perfect(mm, got->x, got->p);
  out.p = std::move(got->p);
  out.sigma = 2.0 * opts.epsilon;
  out.lambda = opts.epsilon;
  out.thrifty = true;
  return out;
}

std::optional<EquilibriumCandidate> solve_matching_fixed_agents(
    const MatchingMarket& mm, const MatchingFixedAgentsOptions& opts,
    SearchStats* stats) {
  validate_matching(mm);
  const FisherMarket fisher = relax_to_partial(mm);

  for (std::size_t j = 0; j < mm.num_items; ++j) {
    FixedAgentsOptions inner;
    inner.sigma = opts.sigma;
    inner.threads = opts.threads;
    inner.zero_price_items = {j};
    SearchStats local;
    auto got = solve_fixed_agents(fisher, inner, stats ? &local : nullptr);
    if (stats) {
      stats->lp_count += local.lp_count;
      stats->grid_points += local.grid_points;
      stats->probes += local.probes;
    }
    if (!got) continue;
    got->p[j] = 0.0;  // pinned by an equality row, exact up to solver slop
    EquilibriumCandidate out;
    out.x = lift_partial_to_perfect(mm, got->x, got->p);
    out.p = std::move(got->p);
    out.sigma = 2.0 * opts.sigma;
    out.lambda = got->lambda;
    out.thrifty = false;
    return out;
  }
  return std::nullopt;
}

std::optional<EquilibriumCandidate> solve_hz_thrifty_fixed_agents(
    const MatchingMarket& mm, const MatchingFixedAgentsOptions& opts,
    SearchStats* stats) {
  validate_matching(mm);
  if (!(opts.sigma > 0.0) || !(opts.sigma < 1.0))
    throw MarketError("solve_hz_thrifty_fixed_agents: sigma must be in (0, 1)");
  const std::size_t n = mm.utilities.size();
  const std::size_t m = mm.num_items;
  for (const auto& plc : mm.utilities) {
    if (plc.pieces.size() != 1 || plc.pieces[0].beta != 0.0)
      throw NotLinear(
          "solve_hz_thrifty_fixed_agents: utilities must be one linear piece");
    for (const double c : plc.pieces[0].a)
      if (c < 0.0)
        throw MarketError(
            "solve_hz_thrifty_fixed_agents: negative item coefficient");
  }

  const double delta =
      opts.sigma * opts.sigma / (4.0 * static_cast<double>(n));
  const double xi = opts.sigma / 2.0;
  const double sum_w = static_cast<double>(n);  // unit budgets
  const double spend_bound =
      static_cast<double>(n) * static_cast<double>(n) * delta / xi;

  std::vector<RobustAgent> agents;
  agents.reserve(n);
  std::vector<std::uint64_t> caps(n);
  std::vector<RobustLinearMatching> bumped;
  bumped.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    bumped.push_back(linear_matching_robustify(mm.utilities[i].pieces[0].a, xi));
    const Vec& a = bumped.back().a;
    CplcUtility u;
    u.q = a;
    u.A = {Vec(m, 1.0)};
    u.B = {Vec{}};
    u.b = {1.0};
    const double top = *std::max_element(a.begin(), a.end());
    caps[i] =
        static_cast<std::uint64_t>(std::ceil(top / delta - 1e-12)) + 1;
    agents.push_back({1.0, std::move(u), top});
  }

  PriceSystemConfig config;
  config.delta = delta;
  config.xi = xi;
  config.slack = static_cast<double>(n) * delta * sum_w / xi;
  // Spending may exceed no favourite item's price by much; together with a
  // free item this caps every certified bundle's cost near the cheapest one.
  config.dynamic_rows = [&, spend_bound](const Mat& x) {
    std::vector<ExtraRow> rows;
    for (std::size_t i = 0; i < n; ++i)
      for (const std::size_t fav : bumped[i].argmax) {
        ExtraRow row;
        row.p_coeffs = x[i];
        row.p_coeffs[fav] -= 1.0;
        row.rhs = spend_bound;
        rows.push_back(std::move(row));
      }
    return rows;
  };

  for (std::size_t j0 = 0; j0 < m; ++j0) {
    config.extra_rows.clear();
    ExtraRow pin;
    pin.p_coeffs.assign(m, 0.0);
    pin.p_coeffs[j0] = 1.0;
    pin.rel = lp::Relation::equal;
    config.extra_rows.push_back(std::move(pin));

    // The free item puts value a_i(j0) within every budget, so smaller
    // guesses can never be certified.
    std::vector<std::uint64_t> floors(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const double reach = bumped[i].a[j0];
      if (reach > 0.0) {
        const auto steps = static_cast<std::uint64_t>(
            std::max(0.0, std::floor(reach / delta) - 2.0));
        floors[i] = std::min(steps, caps[i]);
      }
    }

    SearchStats local;
    auto got = guess_loop(m, agents, caps, floors, config, opts.threads,
                          stats ? &local : nullptr);
    if (stats) {
      stats->lp_count += local.lp_count;
      stats->grid_points += local.grid_points;
      stats->probes += local.probes;
    }
    if (!got) continue;
    got->p[j0] = 0.0;  // pinned by an equality row, exact up to solver slop
    EquilibriumCandidate out;
    out.x = lift_partial_to_perfect(mm, got->x, got->p);
    out.p = std::move(got->p);
    out.sigma = std::min(2.0 * opts.sigma,
                         2.0 * delta * (1.0 + static_cast<double>(n)) / xi);
    out.lambda = std::min(opts.sigma, xi + 2.0 * delta);
    out.thrifty = true;
    return out;
  }
  return std::nullopt;
}

}  // namespace marketeq
