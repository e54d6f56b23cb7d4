#pragma once

// Shared test helpers: independent brute-force oracles and deterministic
// instance generators. Everything here is intentionally simple and slow;
// it exists to cross-check the production code, not to share logic with it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "marketeq/lp_solver.hpp"
#include "marketeq/market_model.hpp"
#include "marketeq/types.hpp"

namespace testsupport {

using marketeq::Mat;
using marketeq::Vec;

// Hand-rolled uniforms so generated cases do not depend on the standard
// library's distribution implementations.
inline double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * u01(rng);
}

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t count) {
  return static_cast<std::size_t>(rng() % count);
}

// Solves the square system M x = r by Gaussian elimination with partial
// pivoting. Returns nullopt when M is (near) singular.
inline std::optional<Vec> solve_square(Mat M, Vec r) {
  const std::size_t n = r.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t i = c + 1; i < n; ++i)
      if (std::abs(M[i][c]) > std::abs(M[piv][c])) piv = i;
    if (std::abs(M[piv][c]) < 1e-10) return std::nullopt;
    std::swap(M[piv], M[c]);
    std::swap(r[piv], r[c]);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == c) continue;
      const double f = M[i][c] / M[c][c];
      if (f == 0.0) continue;
      for (std::size_t j = c; j < n; ++j) M[i][j] -= f * M[c][j];
      r[i] -= f * r[c];
    }
  }
  Vec x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = r[i] / M[i][i];
  return x;
}

struct VertexOracleResult {
  bool feasible = false;
  double objective = 0.0;
  Vec x;
};

// Exhaustive basic-solution enumeration for small LPs whose feasible region
// is bounded (every variable must be boxed by the rows or nonnegativity).
// Every vertex of such a region is the intersection of num_vars constraints
// taken as equalities, so trying all subsets finds the optimum.
inline VertexOracleResult vertex_enumeration_oracle(
    const marketeq::lp::LinearProgram& lp) {
  using marketeq::lp::Relation;
  const std::size_t n = lp.num_vars();

  struct Constraint {
    Vec a;
    Relation rel;
    double b;
  };
  std::vector<Constraint> cons;
  for (std::size_t i = 0; i < lp.num_rows(); ++i)
    cons.push_back({lp.row_coeffs[i], lp.row_relations[i], lp.row_rhs[i]});
  for (std::size_t j = 0; j < n; ++j) {
    const bool nonneg = lp.domains.empty() ||
                        lp.domains[j] == marketeq::lp::VarDomain::nonnegative;
    if (!nonneg) continue;
    Vec e(n, 0.0);
    e[j] = 1.0;
    cons.push_back({std::move(e), Relation::greater_equal, 0.0});
  }

  const bool maximize = lp.sense == marketeq::lp::Sense::maximize;
  VertexOracleResult best;

  std::vector<std::size_t> pick(n);
  auto feasible_at = [&](const Vec& x) {
    for (const auto& c : cons) {
      const double slack = marketeq::dot(c.a, x) - c.b;
      const double tol = 1e-7 * (1.0 + std::abs(c.b));
      if (c.rel == Relation::less_equal && slack > tol) return false;
      if (c.rel == Relation::greater_equal && slack < -tol) return false;
      if (c.rel == Relation::equal && std::abs(slack) > tol) return false;
    }
    return true;
  };

  auto consider = [&](const Vec& x) {
    if (!feasible_at(x)) return;
    const double val = marketeq::dot(lp.objective, x);
    if (!best.feasible || (maximize ? val > best.objective : val < best.objective)) {
      best.feasible = true;
      best.objective = val;
      best.x = x;
    }
  };

  // Iterate over all size-n subsets of constraints.
  if (cons.size() < n) return best;
  std::vector<std::size_t> comb(n);
  for (std::size_t i = 0; i < n; ++i) comb[i] = i;
  while (true) {
    Mat M(n, Vec(n));
    Vec r(n);
    for (std::size_t i = 0; i < n; ++i) {
      M[i] = cons[comb[i]].a;
      r[i] = cons[comb[i]].b;
    }
    if (auto x = solve_square(std::move(M), std::move(r))) consider(*x);

    int i = static_cast<int>(n) - 1;
    while (i >= 0 && comb[i] == i + cons.size() - n) --i;
    if (i < 0) return best;
    ++comb[i];
    for (std::size_t k = i + 1; k < n; ++k) comb[k] = comb[k - 1] + 1;
  }
}

// Random LP with a known feasible point and a bounded region: every
// variable gets an upper box row (and a lower one when free), so the
// optimum always exists when the region is nonempty.
inline marketeq::lp::LinearProgram random_boxed_lp(std::mt19937_64& rng) {
  using namespace marketeq::lp;
  LinearProgram lp;
  const std::size_t n = 1 + uniform_index(rng, 4);
  lp.sense = (rng() & 1) ? Sense::maximize : Sense::minimize;
  lp.objective.resize(n);
  lp.domains.resize(n);
  Vec x0(n);
  for (std::size_t j = 0; j < n; ++j) {
    lp.objective[j] = std::round(uniform(rng, -2.0, 2.0) * 4.0) / 4.0;
    const bool free_var = (rng() % 4) == 0;
    lp.domains[j] = free_var ? VarDomain::free_var : VarDomain::nonnegative;
    x0[j] = free_var ? uniform(rng, -2.0, 2.0) : uniform(rng, 0.0, 2.0);
  }

  const std::size_t extra_rows = 1 + uniform_index(rng, 5);
  for (std::size_t i = 0; i < extra_rows; ++i) {
    Vec a(n);
    for (std::size_t j = 0; j < n; ++j)
      a[j] = std::round(uniform(rng, -2.0, 2.0) * 4.0) / 4.0;
    const double at_x0 = marketeq::dot(a, x0);
    const std::size_t kind = uniform_index(rng, 3);
    if (kind == 0)
      lp.add_row(a, Relation::less_equal, at_x0 + uniform(rng, 0.0, 2.0));
    else if (kind == 1)
      lp.add_row(a, Relation::greater_equal, at_x0 - uniform(rng, 0.0, 2.0));
    else
      lp.add_row(a, Relation::equal, at_x0);
  }

  for (std::size_t j = 0; j < n; ++j) {
    Vec e(n, 0.0);
    e[j] = 1.0;
    lp.add_row(e, Relation::less_equal, x0[j] + uniform(rng, 0.5, 3.0));
    if (lp.domains[j] == VarDomain::free_var) {
      Vec e2(n, 0.0);
      e2[j] = 1.0;
      lp.add_row(e2, Relation::greater_equal, x0[j] - uniform(rng, 0.5, 3.0));
    }
  }
  return lp;
}

// ---------------------------------------------------------------------------
// Utility fixtures and generators shared by the market-layer tests.

inline marketeq::CplcUtility linear_cplc(Vec q) {
  marketeq::CplcUtility u;
  u.q = std::move(q);
  return u;
}

// u(x) = min_j rate_j * x_j, as one auxiliary variable below every item.
inline marketeq::CplcUtility leontief_cplc(const Vec& rates) {
  marketeq::CplcUtility u;
  u.q.assign(rates.size(), 0.0);
  u.s = {1.0};
  for (std::size_t j = 0; j < rates.size(); ++j) {
    Vec row(rates.size(), 0.0);
    row[j] = -rates[j];
    u.A.push_back(std::move(row));
    u.B.push_back({1.0});
    u.b.push_back(0.0);
  }
  return u;
}

// Random PLC with nonnegative slopes, first offset pinned to zero and one
// coordinate bounded away from zero so the box maximum is positive.
inline marketeq::PlcUtility random_plc(std::mt19937_64& rng, std::size_t m,
                                       std::size_t max_pieces = 3) {
  marketeq::PlcUtility plc;
  const std::size_t pieces = 1 + uniform_index(rng, max_pieces);
  for (std::size_t l = 0; l < pieces; ++l) {
    marketeq::PlcPiece piece;
    piece.a.resize(m);
    for (std::size_t j = 0; j < m; ++j)
      piece.a[j] = std::round(uniform(rng, 0.0, 2.0) * 4.0) / 4.0;
    piece.a[0] = std::max(piece.a[0], 0.25);
    piece.beta = l == 0 ? 0.0 : std::round(uniform(rng, 0.0, 1.0) * 4.0) / 4.0;
    plc.pieces.push_back(std::move(piece));
  }
  return plc;
}

// Random regular CPLC utility: linear, capped linear, Leontief-style, or a
// converted random PLC. Always u(0) = 0 and 0 < v_max < infinity.
inline marketeq::CplcUtility random_cplc(std::mt19937_64& rng, std::size_t m) {
  const std::size_t kind = uniform_index(rng, 4);
  if (kind == 0) {
    Vec q(m);
    for (auto& c : q) c = std::round(uniform(rng, 0.25, 2.0) * 4.0) / 4.0;
    return linear_cplc(std::move(q));
  }
  if (kind == 1) {
    // linear with per-item caps, so satiation happens inside the box
    marketeq::CplcUtility u;
    u.q.resize(m);
    for (auto& c : u.q) c = std::round(uniform(rng, 0.25, 2.0) * 4.0) / 4.0;
    for (std::size_t j = 0; j < m; ++j) {
      Vec row(m, 0.0);
      row[j] = 1.0;
      u.A.push_back(std::move(row));
      u.B.push_back({});
      u.b.push_back(std::round(uniform(rng, 0.25, 1.0) * 4.0) / 4.0);
    }
    return u;
  }
  if (kind == 2) {
    Vec rates(m);
    for (auto& r : rates) r = std::round(uniform(rng, 0.5, 2.0) * 4.0) / 4.0;
    return leontief_cplc(rates);
  }
  return marketeq::plc_to_cplc(random_plc(rng, m), m);
}

}  // namespace testsupport
