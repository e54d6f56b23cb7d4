#include <algorithm>
#include <cmath>
#include <utility>

#include "doctest.h"
#include "marketeq/arrow_debreu.hpp"
#include "marketeq/fisher_fixed_agents.hpp"
#include "marketeq/fisher_fixed_items.hpp"
#include "marketeq/matching.hpp"
#include "marketeq/oracle.hpp"
#include "marketeq/verify.hpp"
#include "support.hpp"

using namespace marketeq;

namespace {

CplcUtility linear_cplc(Vec a) {
  CplcUtility u;
  u.q = std::move(a);
  return u;
}

PlcUtility linear_plc(Vec a) {
  PlcUtility plc;
  plc.pieces.push_back({std::move(a), 0.0});
  return plc;
}

FisherMarket one_linear_agent() {
  FisherMarket market;
  market.num_items = 1;
  market.agents.push_back({1.0, linear_cplc({1.0})});
  return market;
}

// Crossed preferences with unit budgets: each agent buys its favourite at
// prices (1, 1), an equilibrium that maximizes budget-weighted log utility.
FisherMarket crossed_pair() {
  FisherMarket market;
  market.num_items = 2;
  market.agents.push_back({1.0, linear_cplc({2.0, 1.0})});
  market.agents.push_back({1.0, linear_cplc({1.0, 2.0})});
  return market;
}

}  // namespace

TEST_CASE("single-agent fisher verdicts react to the utility gap") {
  const FisherMarket market = one_linear_agent();

  const auto pass = verify_fisher(market, {{1.0}}, {1.0}, 0.0, 1e-9, true);
  CHECK(pass.pass);
  CHECK(pass.utility_gap[0] == doctest::Approx(0.0));
  CHECK(pass.budget_excess[0] == doctest::Approx(0.0));
  CHECK(pass.thrifty_excess[0] == doctest::Approx(0.0));
  CHECK(pass.clearing_slack == doctest::Approx(0.0));

  const auto fail = verify_fisher(market, {{0.5}}, {1.0}, 0.0, 1e-9, true);
  CHECK_FALSE(fail.pass);
  CHECK(fail.utility_gap[0] == doctest::Approx(0.5));
}

TEST_CASE("crossed linear pair passes at its known equilibrium") {
  const FisherMarket market = crossed_pair();
  const Mat x = {{1.0, 0.0}, {0.0, 1.0}};
  const Vec p = {1.0, 1.0};
  const auto report = verify_fisher(market, x, p, 1e-7, 1e-7, true);
  CHECK(report.pass);
  CHECK(report.utility_gap[0] == doctest::Approx(0.0));
  CHECK(report.utility_gap[1] == doctest::Approx(0.0));
}

TEST_CASE("fisher verdicts catch every definition bullet") {
  const FisherMarket market = crossed_pair();
  const Vec p = {1.0, 1.0};

  // Oversupply: more than the unit stock of item 1 handed out.
  auto r = verify_fisher(market, {{1.2, 0.0}, {0.0, 1.0}}, p, 0.5, 0.5, false);
  CHECK_FALSE(r.pass);
  CHECK(r.oversupply == doctest::Approx(0.2));

  // Negative holdings.
  r = verify_fisher(market, {{1.0, -0.1}, {0.0, 1.0}}, p, 0.5, 0.5, false);
  CHECK_FALSE(r.pass);
  CHECK(r.min_allocation == doctest::Approx(-0.1));

  // Unsold value: nobody takes item 2, worth half the money supply.
  r = verify_fisher(market, {{1.0, 0.0}, {0.0, 0.0}}, p, 0.1, 2.5, false);
  CHECK_FALSE(r.pass);
  CHECK(r.clearing_slack == doctest::Approx(1.0));

  // Budget excess beyond sigma of the money supply.
  const Vec steep = {2.0, 2.0};
  r = verify_fisher(market, {{1.0, 0.0}, {0.0, 1.0}}, steep, 0.1, 2.0, false);
  CHECK_FALSE(r.pass);
  CHECK(r.budget_excess[0] == doctest::Approx(1.0));

  CHECK_THROWS_AS(verify_fisher(market, {{1.0}, {0.0, 1.0}}, p, 1, 1, false),
                  const DimensionMismatch&);
  CHECK_THROWS_AS(verify_fisher(market, {{1.0, 0.0}}, p, 1, 1, false),
                  const DimensionMismatch&);
}

TEST_CASE("unbounded demand at free desired items fails verification") {
  const FisherMarket market = one_linear_agent();
  const auto r = verify_fisher(market, {{1.0}}, {0.0}, 0.5, 0.5, false);
  CHECK_FALSE(r.pass);
  CHECK(r.utility_gap[0] == std::numeric_limits<double>::infinity());
}

TEST_CASE("both fixture candidates verify as exact matching equilibria") {
  const auto f = nonconvexity_fixture();
  for (const auto* cand : {&f.low, &f.high}) {
    const auto report =
        verify_matching(f.market, cand->x, cand->p, 1e-7, 1e-7, true);
    CHECK(report.pass);
    CHECK(report.min_price == doctest::Approx(0.0));
    CHECK(report.matching_defect <= 1e-12);
    for (const double gap : report.utility_gap) CHECK(gap <= 1e-8);
    for (const double e : report.thrifty_excess) CHECK(e <= 1e-8);
  }
}

TEST_CASE("matching verdicts enforce the matching-specific bullets") {
  const auto f = nonconvexity_fixture();

  // Holding less than one unit fails even with perfect prices.
  Mat short_x = f.low.x;
  short_x[1][1] = 0.9;
  auto r = verify_matching(f.market, short_x, f.low.p, 0.5, 0.5, false);
  CHECK_FALSE(r.pass);
  CHECK(r.matching_defect == doctest::Approx(0.1));

  // A price vector bounded away from zero fails the free-item rule.
  const Vec shifted = {0.5, 1.0, 2.0};
  r = verify_matching(f.market, f.low.x, shifted, 0.5, 0.5, false);
  CHECK_FALSE(r.pass);
  CHECK(r.min_price == doctest::Approx(0.5));
}

TEST_CASE("midpoint prices are rejected below the oracle floor") {
  const auto f = nonconvexity_fixture();
  const FisherMarket relaxed = relax_to_partial(f.market);

  // The two printed price vectors clear exactly; their midpoint cannot get
  // closer than this much, pinned by the residual oracle.
  const double reject = 0.0166;
  const double floor = residual_program(relaxed, f.midpoint_price);
  CHECK(floor >= reject);
  CHECK(floor == doctest::Approx(1.0 / 60.0).epsilon(1e-6));
  CHECK(residual_program(relaxed, f.low.p) <= 1e-7);
  CHECK(residual_program(relaxed, f.high.p) <= 1e-7);

  // A thrifty pass at levels (s, l) would witness a residual of at most
  // max(s, l), so every completing allocation must fail below the floor.
  Mat witness;
  residual_program(relaxed, f.midpoint_price, &witness);
  const Mat lifted =
      lift_partial_to_perfect(f.market, witness, f.midpoint_price);
  for (const Mat* x : {&lifted, &f.low.x, &f.high.x}) {
    const auto report =
        verify_matching(f.market, *x, f.midpoint_price, 0.015, 0.015, true);
    CHECK_FALSE(report.pass);
  }
}

TEST_CASE("midpoint allocation admits no supporting prices") {
  const auto f = nonconvexity_fixture();

  std::vector<RobustAgent> agents;
  for (const auto& plc : f.market.utilities) {
    CplcUtility u = plc_to_cplc(plc, 3, MatchingConstraint::perfect);
    const double vm = v_max(u);
    agents.push_back({1.0, std::move(u), vm});
  }
  // Near-exact certificate: utilities must match the bundle values and the
  // money rows get only round-off slack. Feasible for both true equilibria,
  // infeasible for the averaged allocation at any prices whatsoever.
  PriceSystemConfig config;
  config.delta = 1e-9;
  config.xi = 1.0;
  config.slack = 1e-9;
  auto support = [&](const Mat& x) {
    Vec guesses(3);
    for (std::size_t i = 0; i < 3; ++i)
      guesses[i] =
          eval_utility(agents[i].utility, x[i]) - 2.0 * config.delta;
    return price_system(3, agents, guesses, x, config);
  };

  CHECK(support(f.low.x).has_value());
  CHECK(support(f.high.x).has_value());
  CHECK_FALSE(support(f.midpoint_allocation).has_value());
}

TEST_CASE("ad verdicts recompute incomes and demand the unit price total") {
  AdMarket ad;
  ad.num_items = 2;
  ad.agents.push_back({{0.5, 0.5}, linear_plc({1.0, 0.0})});
  ad.agents.push_back({{0.5, 0.5}, linear_plc({0.0, 1.0})});

  const Mat identity = {{1.0, 0.0}, {0.0, 1.0}};
  auto r = verify_ad(ad, identity, {0.5, 0.5}, 1e-9, 1e-9);
  CHECK(r.pass);
  CHECK(r.price_total == doctest::Approx(1.0));
  CHECK(r.budget_excess[0] == doctest::Approx(0.0));

  // Scaling both prices down breaks only the normalization bullet.
  r = verify_ad(ad, identity, {0.4, 0.4}, 0.5, 0.5);
  CHECK_FALSE(r.pass);
  CHECK(r.price_total == doctest::Approx(0.8));
  for (const double gap : r.utility_gap) CHECK(gap <= 1e-9);

  AdMarket sole;
  sole.num_items = 2;
  sole.agents.push_back({{1.0, 1.0}, linear_plc({1.0, 1.0})});
  r = verify_ad(sole, {{1.0, 1.0}}, {0.5, 0.5}, 1e-9, 1e-9);
  CHECK(r.pass);
}

TEST_CASE("grid oracle pins the single linear agent near unit price") {
  const auto best = oracle_grid_search(one_linear_agent(), 0.05);
  CHECK(best.residual <= 0.05 + 1e-9);
  CHECK(best.p[0] >= 0.95);
  CHECK(best.p[0] <= 1.05);
  // The grid point dominating the exact price within one step also clears.
  CHECK(residual_program(one_linear_agent(), {1.0}) <= 1e-7);
}

TEST_CASE("grid oracle finds the exact prices of the matching fixture") {
  const auto f = nonconvexity_fixture();
  const FisherMarket relaxed = relax_to_partial(f.market);
  const auto best = oracle_grid_search(relaxed, 0.125, [](const Vec& p) {
    return *std::min_element(p.begin(), p.end()) == 0.0;
  });
  CHECK(best.residual <= 1e-6);
  CHECK(*std::min_element(best.p.begin(), best.p.end()) == 0.0);
}

TEST_CASE("grid oracle recovers the leontief price family") {
  FisherMarket market;
  market.num_items = 2;
  CplcUtility u;
  u.q = {0.0, 0.0};
  u.s = {1.0};
  u.A = {{-1.0, 0.0}, {0.0, -1.0}};
  u.B = {{1.0}, {1.0}};
  u.b = {0.0, 0.0};
  market.agents.push_back({1.0, std::move(u)});

  const auto best = oracle_grid_search(market, 0.05);
  CHECK(best.residual <= 0.05 + 1e-9);
  CHECK(best.p[0] + best.p[1] >= 0.95);
  CHECK(best.p[0] + best.p[1] <= 1.05);
}

TEST_CASE("oracle rejects bad steps and all-rejecting filters") {
  const FisherMarket market = one_linear_agent();
  CHECK_THROWS_AS(oracle_grid_search(market, 0.0), const MarketError&);
  CHECK_THROWS_AS(
      oracle_grid_search(market, 0.5, [](const Vec&) { return false; }),
      const MarketError&);
}

TEST_CASE("every solver's candidate passes its verifier as advertised") {
  // Fisher, both schemes.
  const FisherMarket fisher = crossed_pair();
  {
    FixedItemsOptions opts;
    opts.epsilon = 0.25;
    opts.threads = 1;
    const auto cand = solve_fixed_items(fisher, opts);
    REQUIRE(cand.has_value());
    CHECK(verify_fisher(fisher, cand->x, cand->p, cand->sigma, cand->lambda,
                        cand->thrifty)
              .pass);
  }
  {
    FixedAgentsOptions opts;
    opts.sigma = 0.5;
    opts.threads = 1;
    const auto cand = solve_fixed_agents(fisher, opts);
    REQUIRE(cand.has_value());
    CHECK(verify_fisher(fisher, cand->x, cand->p, cand->sigma, cand->lambda,
                        cand->thrifty)
              .pass);
  }

  // Matching, all three schemes.
  const auto f = nonconvexity_fixture();
  MatchingMarket half = f.market;
  for (auto& plc : half.utilities)
    for (auto& piece : plc.pieces)
      for (auto& c : piece.a) c *= 0.5;
  {
    MatchingFixedItemsOptions opts;
    opts.epsilon = 0.25;
    opts.threads = 1;
    const auto cand = solve_matching_fixed_items(f.market, opts);
    REQUIRE(cand.has_value());
    CHECK(verify_matching(f.market, cand->x, cand->p, cand->sigma,
                          cand->lambda, cand->thrifty)
              .pass);
  }
  {
    MatchingFixedAgentsOptions opts;
    opts.sigma = 0.5;
    opts.threads = 1;
    const auto cand = solve_matching_fixed_agents(half, opts);
    REQUIRE(cand.has_value());
    CHECK(verify_matching(half, cand->x, cand->p, cand->sigma, cand->lambda,
                          cand->thrifty)
              .pass);
    const auto hz = solve_hz_thrifty_fixed_agents(half, opts);
    REQUIRE(hz.has_value());
    CHECK(verify_matching(half, hz->x, hz->p, hz->sigma, hz->lambda,
                          hz->thrifty)
              .pass);
  }

  // Exchange, both schemes.
  AdMarket ad;
  ad.num_items = 2;
  ad.agents.push_back({{0.5, 0.5}, linear_plc({1.0, 0.0})});
  ad.agents.push_back({{0.5, 0.5}, linear_plc({0.0, 1.0})});
  {
    AdFixedAgentsOptions opts;
    opts.sigma = 0.25;
    opts.threads = 1;
    const auto cand = solve_ad_fixed_agents(ad, opts);
    REQUIRE(cand.has_value());
    CHECK(verify_ad(ad, cand->x, cand->p, cand->sigma, cand->lambda).pass);
  }
  {
    AdFixedItemsOptions opts;
    opts.sigma = 0.5;
    opts.threads = 1;
    const auto cand = solve_ad_fixed_items(ad, opts);
    REQUIRE(cand.has_value());
    CHECK(verify_ad(ad, cand->x, cand->p, cand->sigma, cand->lambda).pass);
  }
}
