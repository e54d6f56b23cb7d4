#pragma once

#include "marketeq/market_model.hpp"
#include "marketeq/types.hpp"

namespace marketeq {

struct RobustifiedCplc {
  CplcUtility utility;
  double xi = 0.0;
  double base_vmax = 0.0;  // box maximum of the source utility

  double vmax() const { return base_vmax + xi; }
};

// Builds u'(x) = max over splits x = x' + x'', alpha + alpha_bar = 1 of
//   u-value earned by x' at scale alpha
//   + u-value earned by x'' at scale alpha_bar, forced up to vmax
//   + xi * alpha_bar.
// The result sandwiches u <= u' <= u + xi, keeps u'(0) = 0, raises the box
// maximum to vmax + xi, and leaves the cheapest maximum-value bundle cost
// unchanged. Requires vmax > 0.
RobustifiedCplc perspective_robustify(const CplcUtility& u, double xi,
                                      double vmax);

// Adds xi/m to every slope of every piece: u'(x) = u(x) + (xi/m) sum_j x_j.
PlcUtility additive_robustify_plc(const PlcUtility& plc, double xi,
                                  std::size_t num_items);

struct RobustLinearMatching {
  Vec a;                            // bumped coefficients
  std::vector<std::size_t> argmax;  // items that received the bump
};

// Adds xi to every coefficient tied (within an absolute 1e-9) with the
// largest one.
RobustLinearMatching linear_matching_robustify(const Vec& a, double xi);

}  // namespace marketeq
