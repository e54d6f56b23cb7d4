#pragma once

#include <cstddef>
#include <vector>

#include "marketeq/types.hpp"

namespace marketeq {

// Constrained piecewise-linear concave utility:
//   u(x) = max_t  q.x + s.t   subject to  A x + B t <= b
// and u(x) = -infinity when no t satisfies the rows. Regular instances
// have u(0) = 0 and u >= 0 somewhere, which all constructors here produce.
struct CplcUtility {
  Vec q;  // per-item coefficients, length m
  Vec s;  // auxiliary coefficients, length r
  Mat A;  // rows x m
  Mat B;  // rows x r
  Vec b;  // row bounds

  std::size_t num_items() const { return q.size(); }
  std::size_t num_aux() const { return s.size(); }
  std::size_t num_rows() const { return b.size(); }
};

struct PlcPiece {
  Vec a;
  double beta = 0.0;
};

// u(x) = min over pieces of (a.x + beta).
struct PlcUtility {
  std::vector<PlcPiece> pieces;
};

struct FisherAgent {
  double budget = 0.0;
  CplcUtility utility;
};

struct FisherMarket {
  std::size_t num_items = 0;
  std::vector<FisherAgent> agents;

  double sum_budgets() const {
    double s = 0.0;
    for (const auto& a : agents) s += a.budget;
    return s;
  }
};

// One unit of each item, every agent must end up with exactly one unit in
// total, budgets are all 1.
struct MatchingMarket {
  std::size_t num_items = 0;
  std::vector<PlcUtility> utilities;  // one per agent
};

// Exchange market: budgets are endowment value at the posted prices.
struct AdAgent {
  Vec endowment;
  PlcUtility utility;
};

struct AdMarket {
  std::size_t num_items = 0;
  std::vector<AdAgent> agents;
};

struct EquilibriumCandidate {
  Mat x;  // n x m allocation
  Vec p;  // m prices
  double sigma = 0.0;
  double lambda = 0.0;
  bool thrifty = false;
};

enum class MatchingConstraint { none, partial, perfect };

// Tie tolerance when a value level is re-imposed as a constraint:
// kTieBase * (1 + |v|).
inline constexpr double kTieBase = 1e-9;

void validate_utility(const CplcUtility& u);

double eval_plc(const PlcUtility& u, const Vec& x);

// Direct LP evaluation; -infinity when x is outside the constraint set.
double eval_utility(const CplcUtility& u, const Vec& x);

// Encodes min_l (a_l.x + beta_l) as a CPLC with one auxiliary variable,
// optionally adding sum_j x_j <= 1 or = 1 rows.
CplcUtility plc_to_cplc(const PlcUtility& plc, std::size_t num_items,
                        MatchingConstraint constraint = MatchingConstraint::none);

// max u over the unit box [0,1]^m.
double v_max(const CplcUtility& u);

// V(p, w): best utility over the budget set {x >= 0 : p.x <= w}. No box
// constraint. Throws UnboundedDemand when the value grows without bound.
double best_value(const CplcUtility& u, const Vec& p, double budget);

// C(p, w): cheapest bundle achieving value v inside the budget set, with v
// re-imposed up to the tie tolerance. v must be finite (take it from
// best_value).
double thrifty_cost(const CplcUtility& u, const Vec& p, double budget,
                    double value);

// C^min(p): cheapest bundle (no budget, no box) achieving the given
// value level, typically v_max(u).
double c_min(const CplcUtility& u, const Vec& p, double value);

struct NormalizedFisher {
  FisherMarket market;              // agents with v_max scaled to exactly 1
  Vec vmax;                         // per original agent
  std::vector<std::size_t> kept;    // original indices of retained agents
  std::vector<std::size_t> removed; // agents with v_max <= feasibility tol
};

// Rescales q and s of every agent by 1/v_max; drops agents whose utility
// cannot exceed the feasibility tolerance anywhere in the box. Throws
// EmptyMarket when nothing remains.
NormalizedFisher normalize_market(const FisherMarket& market);

}  // namespace marketeq
