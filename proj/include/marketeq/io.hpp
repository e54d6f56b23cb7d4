#pragma once

#include <string>
#include <variant>

#include "marketeq/market_model.hpp"
#include "marketeq/verify.hpp"

namespace marketeq {

// The JSON text does not have the expected shape: missing field, wrong
// type, unknown enum value. Messages carry the path of the offending node.
struct SchemaError : MarketError {
  using MarketError::MarketError;
};

// Well-formed JSON describing a market that breaks a model requirement
// (nonpositive endowment share, more agents than items in a matching, ...).
struct InvariantError : MarketError {
  using MarketError::MarketError;
};

using Instance = std::variant<FisherMarket, MatchingMarket, AdMarket>;

// Instance files look like
//   {"model": "fisher" | "matching" | "arrow_debreu",
//    "num_items": m,
//    "agents": [{...}, ...]}
// where a fisher agent carries "budget" and "utility", a matching agent
// just "utility", and an exchange agent "endowment" and "utility".
// Utilities are {"kind": "cplc", "q", "s", "A", "B", "b"} with s/A/B/b
// omittable (fisher only), {"kind": "plc", "pieces": [{"a": [...],
// "b": beta}, ...]}, or the shorthand {"kind": "linear_matching",
// "a": [...]}. Unknown keys are ignored.
Instance parse_instance(const std::string& text);

// Canonical form: fisher utilities as "cplc", the others as "plc". Parsing
// the output reproduces the in-memory instance exactly.
std::string serialize_instance(const Instance& instance);

// {"x": n rows of m numbers, "p": [...], "sigma", "lambda", "thrifty"};
// sigma/lambda default to 0 and thrifty to false when omitted.
EquilibriumCandidate parse_candidate(const std::string& text);
std::string serialize_candidate(const EquilibriumCandidate& cand);

std::string serialize_report(const VerificationReport& report);

// Versioned bundle of the two-equilibria matching example: the instance,
// both exact candidates, and the midpoint data that no prices support.
std::string serialize_nonconvexity_fixture();

}  // namespace marketeq
