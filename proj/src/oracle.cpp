#include "marketeq/oracle.hpp"

#include <cmath>
#include <limits>

#include "marketeq/fisher_fixed_items.hpp"

namespace marketeq {

OracleResult oracle_grid_search(
    const FisherMarket& market, double step,
    const std::function<bool(const Vec&)>& filter) {
  if (!(step > 0.0))
    throw MarketError("oracle_grid_search: step must be positive");
  const std::size_t m = market.num_items;
  if (m == 0) throw EmptyMarket("oracle_grid_search: no items");
  if (market.agents.empty())
    throw EmptyMarket("oracle_grid_search: no agents");
  const double sum_w = market.sum_budgets();
  if (!(sum_w > 0.0))
    throw MarketError("oracle_grid_search: total budget must be positive");

  const auto radix = static_cast<std::uint64_t>(
                         std::ceil(sum_w / step - 1e-12)) +
                     2;
  std::uint64_t total = 1;
  for (std::size_t j = 0; j < m; ++j) {
    if (total > (std::uint64_t{1} << 62) / radix)
      throw MarketError("oracle_grid_search: lattice too large");
    total *= radix;
  }

  double best = std::numeric_limits<double>::infinity();
  std::uint64_t best_index = 0;
  Vec p(m);
  for (std::uint64_t index = 0; index < total; ++index) {
    std::uint64_t rest = index;
    for (std::size_t j = m; j-- > 0;) {
      p[j] = static_cast<double>(rest % radix) * step;
      rest /= radix;
    }
    if (filter && !filter(p)) continue;
    const double residual = residual_program(market, p);
    if (residual < best) {
      best = residual;
      best_index = index;
    }
  }

  if (best == std::numeric_limits<double>::infinity())
    throw MarketError("oracle_grid_search: filter rejected every point");

  OracleResult result;
  result.p.resize(m);
  std::uint64_t rest = best_index;
  for (std::size_t j = m; j-- > 0;) {
    result.p[j] = static_cast<double>(rest % radix) * step;
    rest /= radix;
  }
  result.residual = residual_program(market, result.p, &result.x);
  return result;
}

NonconvexityFixture nonconvexity_fixture() {
  NonconvexityFixture f;
  f.market.num_items = 3;
  auto linear = [](Vec a) {
    PlcUtility plc;
    plc.pieces.push_back({std::move(a), 0.0});
    return plc;
  };
  f.market.utilities.push_back(linear({1.0, 1.0, 2.0}));
  f.market.utilities.push_back(linear({0.0, 1.0, 2.0}));
  f.market.utilities.push_back(linear({1.0, 1.0, 2.0}));

  f.low.p = {0.0, 1.0, 2.0};
  f.low.x = {{0.5, 0.0, 0.5}, {0.0, 1.0, 0.0}, {0.5, 0.0, 0.5}};
  f.low.sigma = 0.0;
  f.low.lambda = 0.0;
  f.low.thrifty = true;

  f.high.p = {0.0, 0.0, 3.0};
  f.high.x = {{2.0 / 3, 0.0, 1.0 / 3},
              {0.0, 2.0 / 3, 1.0 / 3},
              {1.0 / 3, 1.0 / 3, 1.0 / 3}};
  f.high.sigma = 0.0;
  f.high.lambda = 0.0;
  f.high.thrifty = true;

  f.midpoint_price = {0.0, 0.5, 2.5};
  f.midpoint_allocation.assign(3, Vec(3, 0.0));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      f.midpoint_allocation[i][j] = 0.5 * (f.low.x[i][j] + f.high.x[i][j]);
  return f;
}

}  // namespace marketeq
