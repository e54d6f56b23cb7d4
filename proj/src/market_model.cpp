#include "marketeq/market_model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "marketeq/lp_blocks.hpp"
#include "marketeq/lp_solver.hpp"

namespace marketeq {

namespace {

constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

using lp::LpBuilder;
using lp::LpStatus;
using lp::Relation;
using lp::Sense;
using lp::VarDomain;

}  // namespace

UtilityVars add_utility_block(LpBuilder& builder, const CplcUtility& u,
                              double x_objective_scale, double t_objective_scale) {
  UtilityVars vars;
  vars.x.reserve(u.num_items());
  for (std::size_t j = 0; j < u.num_items(); ++j)
    vars.x.push_back(builder.add_var(x_objective_scale * u.q[j]));
  for (std::size_t k = 0; k < u.num_aux(); ++k)
    vars.t.push_back(
        builder.add_var(t_objective_scale * u.s[k], VarDomain::free_var));
  for (std::size_t row = 0; row < u.num_rows(); ++row) {
    std::vector<std::pair<std::size_t, double>> terms;
    for (std::size_t j = 0; j < u.num_items(); ++j)
      if (u.A[row][j] != 0.0) terms.emplace_back(vars.x[j], u.A[row][j]);
    for (std::size_t k = 0; k < u.num_aux(); ++k)
      if (u.B[row][k] != 0.0) terms.emplace_back(vars.t[k], u.B[row][k]);
    builder.add_row(terms, Relation::less_equal, u.b[row]);
  }
  return vars;
}

void add_value_floor(LpBuilder& builder, const CplcUtility& u,
                     const UtilityVars& vars, double level) {
  std::vector<std::pair<std::size_t, double>> terms;
  for (std::size_t j = 0; j < u.num_items(); ++j)
    if (u.q[j] != 0.0) terms.emplace_back(vars.x[j], u.q[j]);
  for (std::size_t k = 0; k < u.num_aux(); ++k)
    if (u.s[k] != 0.0) terms.emplace_back(vars.t[k], u.s[k]);
  builder.add_row(terms, Relation::greater_equal, level);
}

void validate_utility(const CplcUtility& u) {
  const std::size_t m = u.num_items();
  const std::size_t r = u.num_aux();
  if (u.A.size() != u.b.size() || u.B.size() != u.b.size())
    throw DimensionMismatch("utility: A, B, b row counts differ");
  for (std::size_t i = 0; i < u.b.size(); ++i) {
    if (u.A[i].size() != m)
      throw DimensionMismatch("utility: A row " + std::to_string(i) +
                              " has wrong width");
    if (u.B[i].size() != r)
      throw DimensionMismatch("utility: B row " + std::to_string(i) +
                              " has wrong width");
  }
}

double eval_plc(const PlcUtility& u, const Vec& x) {
  if (u.pieces.empty()) throw DimensionMismatch("plc utility with no pieces");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& piece : u.pieces) {
    const double v = dot(piece.a, x) + piece.beta;
    if (v < best) best = v;
  }
  return best;
}

double eval_utility(const CplcUtility& u, const Vec& x) {
  validate_utility(u);
  if (x.size() != u.num_items())
    throw DimensionMismatch("eval_utility: bundle size mismatch");

  const double base = u.q.empty() ? 0.0 : dot(u.q, x);
  LpBuilder builder(Sense::maximize);
  std::vector<std::size_t> t;
  for (std::size_t k = 0; k < u.num_aux(); ++k)
    t.push_back(builder.add_var(u.s[k], VarDomain::free_var));
  for (std::size_t row = 0; row < u.num_rows(); ++row) {
    std::vector<std::pair<std::size_t, double>> terms;
    for (std::size_t k = 0; k < u.num_aux(); ++k)
      if (u.B[row][k] != 0.0) terms.emplace_back(t[k], u.B[row][k]);
    builder.add_row(terms, Relation::less_equal,
                    u.b[row] - dot(u.A[row], x));
  }
  const auto out = lp::solve_lp(builder.take());
  if (out.status == LpStatus::infeasible) return kMinusInf;
  if (out.status == LpStatus::unbounded)
    throw UnboundedUtility("utility unbounded at a fixed bundle");
  return base + out.objective;
}

CplcUtility plc_to_cplc(const PlcUtility& plc, std::size_t num_items,
                        MatchingConstraint constraint) {
  if (plc.pieces.empty()) throw DimensionMismatch("plc utility with no pieces");
  CplcUtility u;
  u.q.assign(num_items, 0.0);
  u.s = {1.0};
  for (const auto& piece : plc.pieces) {
    if (piece.a.size() != num_items)
      throw DimensionMismatch("plc piece has wrong item count");
    Vec row(num_items);
    for (std::size_t j = 0; j < num_items; ++j) row[j] = -piece.a[j];
    u.A.push_back(std::move(row));
    u.B.push_back({1.0});
    u.b.push_back(piece.beta);
  }
  if (constraint != MatchingConstraint::none) {
    u.A.emplace_back(num_items, 1.0);
    u.B.push_back({0.0});
    u.b.push_back(1.0);
    if (constraint == MatchingConstraint::perfect) {
      u.A.emplace_back(num_items, -1.0);
      u.B.push_back({0.0});
      u.b.push_back(-1.0);
    }
  }
  return u;
}

double v_max(const CplcUtility& u) {
  validate_utility(u);
  LpBuilder builder(Sense::maximize);
  const auto vars = add_utility_block(builder, u, 1.0, 1.0);
  for (std::size_t j = 0; j < u.num_items(); ++j)
    builder.add_row({{vars.x[j], 1.0}}, Relation::less_equal, 1.0);
  const auto out = lp::solve_lp(builder.take());
  if (out.status == LpStatus::infeasible)
    throw InfeasibleUtility("utility constraint set is empty over the box");
  if (out.status == LpStatus::unbounded)
    throw UnboundedUtility("utility unbounded over the unit box");
  return out.objective;
}

double best_value(const CplcUtility& u, const Vec& p, double budget) {
  validate_utility(u);
  if (p.size() != u.num_items())
    throw DimensionMismatch("best_value: price size mismatch");
  LpBuilder builder(Sense::maximize);
  const auto vars = add_utility_block(builder, u, 1.0, 1.0);
  {
    std::vector<std::pair<std::size_t, double>> terms;
    for (std::size_t j = 0; j < p.size(); ++j)
      if (p[j] != 0.0) terms.emplace_back(vars.x[j], p[j]);
    builder.add_row(terms, Relation::less_equal, budget);
  }
  const auto out = lp::solve_lp(builder.take());
  if (out.status == LpStatus::infeasible) return kMinusInf;
  if (out.status == LpStatus::unbounded)
    throw UnboundedDemand("budget set admits unbounded utility");
  return out.objective;
}

namespace {

// Cheapest bundle reaching the value level, optionally inside a budget.
double min_cost_at_level(const CplcUtility& u, const Vec& p, double value,
                         const double* budget, const char* who) {
  validate_utility(u);
  if (p.size() != u.num_items())
    throw DimensionMismatch(std::string(who) + ": price size mismatch");
  if (!std::isfinite(value))
    throw MarketError(std::string(who) + ": value level must be finite");

  LpBuilder builder(Sense::minimize);
  UtilityVars vars;
  vars.x.reserve(u.num_items());
  for (std::size_t j = 0; j < u.num_items(); ++j)
    vars.x.push_back(builder.add_var(p[j]));
  for (std::size_t k = 0; k < u.num_aux(); ++k)
    vars.t.push_back(builder.add_var(0.0, VarDomain::free_var));
  for (std::size_t row = 0; row < u.num_rows(); ++row) {
    std::vector<std::pair<std::size_t, double>> terms;
    for (std::size_t j = 0; j < u.num_items(); ++j)
      if (u.A[row][j] != 0.0) terms.emplace_back(vars.x[j], u.A[row][j]);
    for (std::size_t k = 0; k < u.num_aux(); ++k)
      if (u.B[row][k] != 0.0) terms.emplace_back(vars.t[k], u.B[row][k]);
    builder.add_row(terms, Relation::less_equal, u.b[row]);
  }
  if (budget) {
    std::vector<std::pair<std::size_t, double>> terms;
    for (std::size_t j = 0; j < p.size(); ++j)
      if (p[j] != 0.0) terms.emplace_back(vars.x[j], p[j]);
    builder.add_row(terms, Relation::less_equal, *budget);
  }
  add_value_floor(builder, u, vars,
                  value - kTieBase * (1.0 + std::abs(value)));
  const auto out = lp::solve_lp(builder.take());
  if (out.status != LpStatus::optimal)
    throw MarketError(std::string(who) + ": value level unreachable");
  return out.objective;
}

}  // namespace

double thrifty_cost(const CplcUtility& u, const Vec& p, double budget,
                    double value) {
  return min_cost_at_level(u, p, value, &budget, "thrifty_cost");
}

double c_min(const CplcUtility& u, const Vec& p, double value) {
  return min_cost_at_level(u, p, value, nullptr, "c_min");
}

NormalizedFisher normalize_market(const FisherMarket& market) {
  NormalizedFisher result;
  result.market.num_items = market.num_items;
  result.vmax.reserve(market.agents.size());
  for (std::size_t i = 0; i < market.agents.size(); ++i) {
    const auto& agent = market.agents[i];
    const double vm = v_max(agent.utility);
    result.vmax.push_back(vm);
    if (vm <= lp::kFeasTol) {
      result.removed.push_back(i);
      continue;
    }
    FisherAgent scaled = agent;
    for (double& c : scaled.utility.q) c /= vm;
    for (double& c : scaled.utility.s) c /= vm;
    result.market.agents.push_back(std::move(scaled));
    result.kept.push_back(i);
  }
  if (result.market.agents.empty())
    throw EmptyMarket("no agent has positive utility anywhere in the box");
  return result;
}

}  // namespace marketeq
