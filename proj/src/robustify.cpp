#include "marketeq/robustify.hpp"

#include <cmath>

namespace marketeq {

RobustifiedCplc perspective_robustify(const CplcUtility& u, double xi,
                                      double vmax) {
  validate_utility(u);
  if (!(vmax > 0.0))
    throw NonPositiveVmax("perspective robustification needs vmax > 0");
  if (xi < 0.0) throw MarketError("negative robustification amount");

  const std::size_t m = u.num_items();
  const std::size_t r = u.num_aux();
  const std::size_t p = u.num_rows();

  // Auxiliary layout: x' (m) | x'' (m) | t' (r) | t'' (r) | alpha | alpha_bar
  const std::size_t xp = 0, xpp = m, tp = 2 * m, tpp = 2 * m + r;
  const std::size_t al = 2 * m + 2 * r, alb = al + 1;
  const std::size_t raux = alb + 1;

  CplcUtility out;
  out.q.assign(m, 0.0);
  out.s.assign(raux, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    out.s[xp + j] = u.q[j];
    out.s[xpp + j] = u.q[j];
  }
  for (std::size_t k = 0; k < r; ++k) {
    out.s[tp + k] = u.s[k];
    out.s[tpp + k] = u.s[k];
  }
  out.s[alb] = xi;

  auto blank_row = [&]() {
    out.A.emplace_back(m, 0.0);
    out.B.emplace_back(raux, 0.0);
  };

  // scaled constraint sets: A x' + B t' <= alpha b, same for the forced part
  for (std::size_t row = 0; row < p; ++row) {
    blank_row();
    for (std::size_t j = 0; j < m; ++j) out.B.back()[xp + j] = u.A[row][j];
    for (std::size_t k = 0; k < r; ++k) out.B.back()[tp + k] = u.B[row][k];
    out.B.back()[al] = -u.b[row];
    out.b.push_back(0.0);
  }
  for (std::size_t row = 0; row < p; ++row) {
    blank_row();
    for (std::size_t j = 0; j < m; ++j) out.B.back()[xpp + j] = u.A[row][j];
    for (std::size_t k = 0; k < r; ++k) out.B.back()[tpp + k] = u.B[row][k];
    out.B.back()[alb] = -u.b[row];
    out.b.push_back(0.0);
  }

  // the x'' part must earn the full (scaled) maximum value
  blank_row();
  for (std::size_t j = 0; j < m; ++j) out.B.back()[xpp + j] = -u.q[j];
  for (std::size_t k = 0; k < r; ++k) out.B.back()[tpp + k] = -u.s[k];
  out.B.back()[alb] = vmax;
  out.b.push_back(0.0);

  // split consistency: x' + x'' = x
  for (std::size_t j = 0; j < m; ++j) {
    blank_row();
    out.A.back()[j] = -1.0;
    out.B.back()[xp + j] = 1.0;
    out.B.back()[xpp + j] = 1.0;
    out.b.push_back(0.0);
    blank_row();
    out.A.back()[j] = 1.0;
    out.B.back()[xp + j] = -1.0;
    out.B.back()[xpp + j] = -1.0;
    out.b.push_back(0.0);
  }

  // alpha + alpha_bar = 1
  blank_row();
  out.B.back()[al] = 1.0;
  out.B.back()[alb] = 1.0;
  out.b.push_back(1.0);
  blank_row();
  out.B.back()[al] = -1.0;
  out.B.back()[alb] = -1.0;
  out.b.push_back(-1.0);

  // sign constraints on the split pieces and the weights
  for (std::size_t j = 0; j < 2 * m; ++j) {
    blank_row();
    out.B.back()[xp + j] = -1.0;
    out.b.push_back(0.0);
  }
  blank_row();
  out.B.back()[al] = -1.0;
  out.b.push_back(0.0);
  blank_row();
  out.B.back()[alb] = -1.0;
  out.b.push_back(0.0);

  return RobustifiedCplc{std::move(out), xi, vmax};
}

PlcUtility additive_robustify_plc(const PlcUtility& plc, double xi,
                                  std::size_t num_items) {
  if (plc.pieces.empty()) throw DimensionMismatch("plc utility with no pieces");
  if (xi < 0.0) throw MarketError("negative robustification amount");
  PlcUtility out = plc;
  const double bump = xi / static_cast<double>(num_items);
  for (auto& piece : out.pieces) {
    if (piece.a.size() != num_items)
      throw DimensionMismatch("plc piece has wrong item count");
    for (double& c : piece.a) c += bump;
  }
  return out;
}

RobustLinearMatching linear_matching_robustify(const Vec& a, double xi) {
  if (a.empty()) throw DimensionMismatch("empty coefficient vector");
  if (xi < 0.0) throw MarketError("negative robustification amount");
  double top = a[0];
  for (double c : a) top = std::max(top, c);
  RobustLinearMatching out;
  out.a = a;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] >= top - 1e-9) {
      out.a[j] += xi;
      out.argmax.push_back(j);
    }
  }
  return out;
}

}  // namespace marketeq
