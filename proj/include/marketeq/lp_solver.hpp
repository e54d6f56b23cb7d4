#pragma once

#include <cstdint>
#include <utility>

#include "marketeq/types.hpp"

namespace marketeq::lp {

enum class Sense { minimize, maximize };
enum class Relation { less_equal, equal, greater_equal };
enum class VarDomain { nonnegative, free_var };
enum class LpStatus { optimal, infeasible, unbounded };

// Row residuals of a returned point are within kFeasTol * (1 + |rhs|).
inline constexpr double kFeasTol = 1e-7;
// |primal objective - dual objective| <= kDualTol * (1 + |objective|).
inline constexpr double kDualTol = 1e-8;
inline constexpr std::uint64_t kMaxPivots = 1'000'000;

struct MalformedProgram : MarketError {
  using MarketError::MarketError;
};

// Pivoting made no progress within the iteration cap, even under Bland's rule.
struct NumericalStall : MarketError {
  using MarketError::MarketError;
};

struct LinearProgram {
  Sense sense = Sense::maximize;
  Vec objective;                   // one entry per variable
  std::vector<VarDomain> domains;  // empty means all nonnegative
  Mat row_coeffs;
  std::vector<Relation> row_relations;
  Vec row_rhs;

  std::size_t num_vars() const { return objective.size(); }
  std::size_t num_rows() const { return row_rhs.size(); }

  void add_row(Vec coeffs, Relation rel, double rhs) {
    row_coeffs.push_back(std::move(coeffs));
    row_relations.push_back(rel);
    row_rhs.push_back(rhs);
  }
};

struct LpOutcome {
  LpStatus status = LpStatus::infeasible;
  Vec x;                  // primal point when optimal (or feasible point)
  double objective = 0.0;
  // Per-row duals. Sign convention: at an optimum, sum_i duals[i]*rhs[i]
  // equals the primal objective regardless of sense.
  Vec duals;
};

// Dense two-phase primal simplex. Deterministic: identical inputs give
// bitwise identical outcomes. Throws MalformedProgram on dimension errors
// or non-finite data, NumericalStall when the pivot cap is hit.
LpOutcome solve_lp(const LinearProgram& lp);

// Phase 1 only. Returns Optimal with some feasible point (objective field
// is the objective evaluated there) or Infeasible. Duals are zeros.
LpOutcome check_feasible(const LinearProgram& lp);

// Incremental construction helper: variables first, then sparse rows.
class LpBuilder {
 public:
  explicit LpBuilder(Sense sense) { lp_.sense = sense; }

  std::size_t add_var(double objective_coeff,
                      VarDomain domain = VarDomain::nonnegative) {
    lp_.objective.push_back(objective_coeff);
    lp_.domains.push_back(domain);
    return lp_.objective.size() - 1;
  }

  std::vector<std::size_t> add_vars(std::size_t count, double objective_coeff,
                                    VarDomain domain = VarDomain::nonnegative) {
    std::vector<std::size_t> ids;
    ids.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
      ids.push_back(add_var(objective_coeff, domain));
    return ids;
  }

  void add_row(const std::vector<std::pair<std::size_t, double>>& terms,
               Relation rel, double rhs) {
    Vec coeffs(lp_.num_vars(), 0.0);
    for (const auto& [var, value] : terms) {
      if (var >= coeffs.size())
        throw MalformedProgram("LpBuilder: variable index out of range");
      coeffs[var] += value;
    }
    lp_.add_row(std::move(coeffs), rel, rhs);
  }

  // Rows added before later variables are padded with zeros here.
  LinearProgram take() {
    for (auto& row : lp_.row_coeffs) row.resize(lp_.num_vars(), 0.0);
    return std::move(lp_);
  }

 private:
  LinearProgram lp_;
};

}  // namespace marketeq::lp
