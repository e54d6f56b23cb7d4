#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace marketeq {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major

// Base for everything this library throws on bad input or bad state.
struct MarketError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : MarketError {
  using MarketError::MarketError;
};

// Utility value is unbounded above over its own constraint set.
struct UnboundedUtility : MarketError {
  using MarketError::MarketError;
};

// Constraint set K of a utility is empty.
struct InfeasibleUtility : MarketError {
  using MarketError::MarketError;
};

// Budget set admits arbitrarily high utility (some desired item is free).
struct UnboundedDemand : MarketError {
  using MarketError::MarketError;
};

struct EmptyMarket : MarketError {
  using MarketError::MarketError;
};

struct NonPositiveVmax : MarketError {
  using MarketError::MarketError;
};

struct NotLinear : MarketError {
  using MarketError::MarketError;
};

// A price transform pushed some price below zero.
struct NegativePrice : MarketError {
  using MarketError::MarketError;
};

// Lifting a partial matching ran out of item mass before every agent held
// one unit. Cannot happen when there are at least as many items as agents.
struct SupplyShortfall : MarketError {
  using MarketError::MarketError;
};

// A search scheme exhausted its grid without an acceptable point.
struct NotFound : MarketError {
  using MarketError::MarketError;
};

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace marketeq
