#include "marketeq/lp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace marketeq::lp {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kDegenerateTol = 1e-11;
constexpr int kBlandTrigger = 50;
constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ColKind : unsigned char { structural, slack, artificial };

// Equality standard form: min cost.z  s.t.  T z = rhs, z >= 0, rhs >= 0.
// Free variables are split, every original row gets an artificial column,
// so the artificial block starts as an identity and the phase-2 reduced
// costs under it expose the duals.
struct Tableau {
  std::size_t width = 0;  // columns + 1 (rhs lives in the last slot)
  std::size_t cols = 0;
  Vec data;               // row-major, rows().size() x width
  Vec zrow;               // reduced-cost row, same width
  std::vector<int> basis;
  std::vector<int> row_origin;  // tableau row -> original row index
  std::vector<ColKind> kind;
  std::vector<int> art_col;     // original row -> artificial column
  std::vector<int> row_sign;    // original row -> +1/-1
  std::vector<int> plus_col;
  std::vector<int> minus_col;
  Vec cost;                     // phase-2 costs (minimization)
  std::vector<char> is_basic;
  std::size_t rows = 0;

  double* row(std::size_t r) { return data.data() + r * width; }
  const double* row(std::size_t r) const { return data.data() + r * width; }
};

void validate(const LinearProgram& lp) {
  const std::size_t n = lp.num_vars();
  if (!lp.domains.empty() && lp.domains.size() != n)
    throw MalformedProgram("domains size does not match variable count");
  if (lp.row_coeffs.size() != lp.row_rhs.size() ||
      lp.row_relations.size() != lp.row_rhs.size())
    throw MalformedProgram("row arrays have inconsistent lengths");
  for (double c : lp.objective)
    if (!std::isfinite(c)) throw MalformedProgram("non-finite objective");
  for (std::size_t i = 0; i < lp.row_rhs.size(); ++i) {
    if (lp.row_coeffs[i].size() != n)
      throw MalformedProgram("row " + std::to_string(i) +
                             " has wrong coefficient count");
    if (!std::isfinite(lp.row_rhs[i]))
      throw MalformedProgram("non-finite rhs");
    for (double c : lp.row_coeffs[i])
      if (!std::isfinite(c)) throw MalformedProgram("non-finite coefficient");
  }
}

Tableau standardize(const LinearProgram& lp) {
  const std::size_t n = lp.num_vars();
  const std::size_t m = lp.num_rows();
  Tableau t;
  t.plus_col.assign(n, -1);
  t.minus_col.assign(n, -1);

  std::size_t next = 0;
  for (std::size_t j = 0; j < n; ++j) {
    t.plus_col[j] = static_cast<int>(next++);
    if (!lp.domains.empty() && lp.domains[j] == VarDomain::free_var)
      t.minus_col[j] = static_cast<int>(next++);
  }
  const std::size_t first_slack = next;

  t.row_sign.assign(m, 1);
  std::vector<Relation> eff(m, Relation::equal);
  std::vector<int> slack_col(m, -1);
  for (std::size_t i = 0; i < m; ++i) {
    t.row_sign[i] = lp.row_rhs[i] < 0.0 ? -1 : 1;
    Relation rel = lp.row_relations[i];
    if (t.row_sign[i] < 0) {
      if (rel == Relation::less_equal) rel = Relation::greater_equal;
      else if (rel == Relation::greater_equal) rel = Relation::less_equal;
    }
    eff[i] = rel;
    if (rel != Relation::equal) slack_col[i] = static_cast<int>(next++);
  }
  t.art_col.assign(m, -1);
  for (std::size_t i = 0; i < m; ++i) t.art_col[i] = static_cast<int>(next++);

  t.cols = next;
  t.width = next + 1;
  t.kind.assign(t.cols, ColKind::structural);
  for (std::size_t c = first_slack; c < t.cols; ++c) t.kind[c] = ColKind::slack;
  for (std::size_t i = 0; i < m; ++i)
    t.kind[t.art_col[i]] = ColKind::artificial;

  t.rows = m;
  t.data.assign(m * t.width, 0.0);
  t.basis.assign(m, -1);
  t.row_origin.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    double* r = t.row(i);
    const double sg = t.row_sign[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double c = sg * lp.row_coeffs[i][j];
      if (c == 0.0) continue;
      r[t.plus_col[j]] = c;
      if (t.minus_col[j] >= 0) r[t.minus_col[j]] = -c;
    }
    if (slack_col[i] >= 0)
      r[slack_col[i]] = eff[i] == Relation::less_equal ? 1.0 : -1.0;
    r[t.art_col[i]] = 1.0;
    r[t.cols] = sg * lp.row_rhs[i];
    t.row_origin[i] = static_cast<int>(i);
    t.basis[i] = eff[i] == Relation::less_equal ? slack_col[i] : t.art_col[i];
  }

  t.cost.assign(t.cols, 0.0);
  const double flip = lp.sense == Sense::maximize ? -1.0 : 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    t.cost[t.plus_col[j]] = flip * lp.objective[j];
    if (t.minus_col[j] >= 0) t.cost[t.minus_col[j]] = -flip * lp.objective[j];
  }

  t.is_basic.assign(t.cols, 0);
  for (std::size_t i = 0; i < m; ++i) t.is_basic[t.basis[i]] = 1;
  return t;
}

void rebuild_zrow(Tableau& t, const Vec& cost) {
  t.zrow.assign(t.width, 0.0);
  for (std::size_t j = 0; j < t.cols; ++j) t.zrow[j] = cost[j];
  for (std::size_t r = 0; r < t.rows; ++r) {
    const double cb = cost[t.basis[r]];
    if (cb == 0.0) continue;
    const double* row = t.row(r);
    for (std::size_t j = 0; j <= t.cols; ++j) t.zrow[j] -= cb * row[j];
  }
}

void pivot(Tableau& t, std::size_t prow, std::size_t pcol) {
  double* pr = t.row(prow);
  const double inv = 1.0 / pr[pcol];
  for (std::size_t j = 0; j <= t.cols; ++j) pr[j] *= inv;
  pr[pcol] = 1.0;
  for (std::size_t r = 0; r < t.rows; ++r) {
    if (r == prow) continue;
    double* row = t.row(r);
    const double f = row[pcol];
    if (f == 0.0) continue;
    for (std::size_t j = 0; j <= t.cols; ++j) row[j] -= f * pr[j];
    row[pcol] = 0.0;
  }
  {
    const double f = t.zrow[pcol];
    if (f != 0.0) {
      for (std::size_t j = 0; j <= t.cols; ++j) t.zrow[j] -= f * pr[j];
      t.zrow[pcol] = 0.0;
    }
  }
  t.is_basic[t.basis[prow]] = 0;
  t.basis[prow] = static_cast<int>(pcol);
  t.is_basic[pcol] = 1;
}

enum class PhaseEnd { optimal, unbounded };

PhaseEnd run_phase(Tableau& t, bool artificials_allowed, std::uint64_t& pivots) {
  int degenerate_streak = 0;
  while (true) {
    if (pivots >= kMaxPivots)
      throw NumericalStall("pivot cap exceeded");
    const bool bland = degenerate_streak >= kBlandTrigger;

    int enter = -1;
    if (bland) {
      for (std::size_t j = 0; j < t.cols; ++j) {
        if (t.is_basic[j]) continue;
        if (!artificials_allowed && t.kind[j] == ColKind::artificial) continue;
        if (t.zrow[j] < -kPivotTol) { enter = static_cast<int>(j); break; }
      }
    } else {
      double best = -kPivotTol;
      for (std::size_t j = 0; j < t.cols; ++j) {
        if (t.is_basic[j]) continue;
        if (!artificials_allowed && t.kind[j] == ColKind::artificial) continue;
        if (t.zrow[j] < best) { best = t.zrow[j]; enter = static_cast<int>(j); }
      }
    }
    if (enter < 0) return PhaseEnd::optimal;

    int leave = -1;
    double best_ratio = kInf;
    double best_piv = 0.0;
    for (std::size_t r = 0; r < t.rows; ++r) {
      const double a = t.row(r)[enter];
      if (a <= kPivotTol) continue;
      double ratio = t.row(r)[t.cols] / a;
      if (ratio < 0.0) ratio = 0.0;  // guards tiny negative rhs drift
      if (ratio < best_ratio) {
        best_ratio = ratio;
        best_piv = a;
        leave = static_cast<int>(r);
      } else if (leave >= 0 && ratio == best_ratio) {
        if (bland) {
          if (t.basis[r] < t.basis[leave]) { leave = static_cast<int>(r); best_piv = a; }
        } else if (a > best_piv ||
                   (a == best_piv && t.basis[r] < t.basis[leave])) {
          leave = static_cast<int>(r);
          best_piv = a;
        }
      }
    }
    if (leave < 0) return PhaseEnd::unbounded;

    degenerate_streak = best_ratio <= kDegenerateTol ? degenerate_streak + 1 : 0;
    ++pivots;
    pivot(t, static_cast<std::size_t>(leave), static_cast<std::size_t>(enter));
  }
}

// Pivot leftover artificial variables out of the basis; rows that cannot be
// freed are linearly dependent on the others and get dropped.
void purge_artificials(Tableau& t, std::vector<char>& row_dropped) {
  for (std::size_t r = 0; r < t.rows;) {
    if (t.kind[t.basis[r]] != ColKind::artificial) { ++r; continue; }
    const double* row = t.row(r);
    int pcol = -1;
    double best = 1e-8;
    for (std::size_t j = 0; j < t.cols; ++j) {
      if (t.kind[j] == ColKind::artificial || t.is_basic[j]) continue;
      if (std::abs(row[j]) > best) { best = std::abs(row[j]); pcol = static_cast<int>(j); }
    }
    if (pcol >= 0) {
      pivot(t, r, static_cast<std::size_t>(pcol));
      ++r;
      continue;
    }
    row_dropped[t.row_origin[r]] = 1;
    t.is_basic[t.basis[r]] = 0;
    const std::size_t last = t.rows - 1;
    if (r != last) {
      std::copy(t.row(last), t.row(last) + t.width, t.row(r));
      t.basis[r] = t.basis[last];
      t.row_origin[r] = t.row_origin[last];
    }
    --t.rows;
    t.basis.pop_back();
    t.row_origin.pop_back();
  }
}

Vec extract_point(const LinearProgram& lp, const Tableau& t) {
  Vec z(t.cols, 0.0);
  for (std::size_t r = 0; r < t.rows; ++r) z[t.basis[r]] = t.row(r)[t.cols];
  Vec x(lp.num_vars(), 0.0);
  for (std::size_t j = 0; j < lp.num_vars(); ++j) {
    x[j] = z[t.plus_col[j]];
    if (t.minus_col[j] >= 0) x[j] -= z[t.minus_col[j]];
  }
  return x;
}

void check_residuals(const LinearProgram& lp, const Vec& x) {
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    const double lhs = dot(lp.row_coeffs[i], x);
    const double slack = lhs - lp.row_rhs[i];
    const double tol = kFeasTol * (1.0 + std::abs(lp.row_rhs[i]));
    bool ok = true;
    switch (lp.row_relations[i]) {
      case Relation::less_equal: ok = slack <= tol; break;
      case Relation::greater_equal: ok = slack >= -tol; break;
      case Relation::equal: ok = std::abs(slack) <= tol; break;
    }
    if (!ok)
      throw NumericalStall("optimal point violates row " + std::to_string(i));
  }
}

LpOutcome solve_impl(const LinearProgram& lp, bool feasibility_only) {
  validate(lp);
  Tableau t = standardize(lp);

  Vec phase1_cost(t.cols, 0.0);
  for (std::size_t i = 0; i < lp.num_rows(); ++i)
    phase1_cost[t.art_col[i]] = 1.0;

  std::uint64_t pivots = 0;
  rebuild_zrow(t, phase1_cost);
  if (run_phase(t, true, pivots) == PhaseEnd::unbounded)
    throw NumericalStall("phase 1 reported unbounded");

  double rhs_scale = 1.0;
  for (double b : lp.row_rhs) rhs_scale += std::abs(b);
  const double infeasibility = -t.zrow[t.cols];
  if (infeasibility > kFeasTol * rhs_scale)
    return LpOutcome{LpStatus::infeasible, {}, 0.0, {}};

  std::vector<char> row_dropped(lp.num_rows(), 0);
  purge_artificials(t, row_dropped);

  if (feasibility_only) {
    LpOutcome out;
    out.status = LpStatus::optimal;
    out.x = extract_point(lp, t);
    out.objective = lp.objective.empty() ? 0.0 : dot(lp.objective, out.x);
    out.duals.assign(lp.num_rows(), 0.0);
    check_residuals(lp, out.x);
    return out;
  }

  rebuild_zrow(t, t.cost);
  if (run_phase(t, false, pivots) == PhaseEnd::unbounded)
    return LpOutcome{LpStatus::unbounded, {}, 0.0, {}};

  LpOutcome out;
  out.status = LpStatus::optimal;
  out.x = extract_point(lp, t);
  out.objective = lp.objective.empty() ? 0.0 : dot(lp.objective, out.x);

  const double sense_factor = lp.sense == Sense::maximize ? -1.0 : 1.0;
  out.duals.assign(lp.num_rows(), 0.0);
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    if (row_dropped[i]) continue;
    const double y_min = -t.zrow[t.art_col[i]];
    out.duals[i] = sense_factor * t.row_sign[i] * y_min;
  }

  check_residuals(lp, out.x);
  const double dual_value = lp.num_rows() ? dot(out.duals, lp.row_rhs) : 0.0;
  if (std::abs(dual_value - out.objective) >
      kDualTol * (1.0 + std::abs(out.objective)))
    throw NumericalStall("strong duality check failed");
  return out;
}

}  // namespace

LpOutcome solve_lp(const LinearProgram& lp) { return solve_impl(lp, false); }

LpOutcome check_feasible(const LinearProgram& lp) { return solve_impl(lp, true); }

}  // namespace marketeq::lp
