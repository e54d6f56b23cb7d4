#include "marketeq/io.hpp"

#include <cstddef>
#include <string>
#include <utility>

#include "json.hpp"
#include "marketeq/arrow_debreu.hpp"
#include "marketeq/oracle.hpp"

namespace marketeq {
namespace {

using nlohmann::json;

std::string idx(const std::string& path, std::size_t k) {
  return path + "[" + std::to_string(k) + "]";
}

[[noreturn]] void wrong_type(const std::string& path, const char* want,
                             const json& got) {
  throw SchemaError(path + ": expected " + want + ", got " +
                    got.type_name());
}

const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) wrong_type(path, "object", obj);
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + "." + key + ": missing");
  return *it;
}

double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) wrong_type(path, "number", j);
  return j.get<double>();
}

std::size_t count_at(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<double>() < 0)
    wrong_type(path, "nonnegative integer", j);
  return j.get<std::size_t>();
}

Vec vec_at(const json& j, const std::string& path) {
  if (!j.is_array()) wrong_type(path, "array of numbers", j);
  Vec out;
  out.reserve(j.size());
  for (std::size_t k = 0; k < j.size(); ++k)
    out.push_back(number_at(j[k], idx(path, k)));
  return out;
}

Mat mat_at(const json& j, const std::string& path) {
  if (!j.is_array()) wrong_type(path, "array of rows", j);
  Mat out;
  out.reserve(j.size());
  for (std::size_t k = 0; k < j.size(); ++k)
    out.push_back(vec_at(j[k], idx(path, k)));
  return out;
}

void require_width(const Vec& v, std::size_t m, const std::string& path) {
  if (v.size() != m)
    throw InvariantError(path + ": expected " + std::to_string(m) +
                         " entries, got " + std::to_string(v.size()));
}

// Piecewise form shared by the matching and exchange models; the shorthand
// kind is a single linear piece.
PlcUtility plc_at(const json& j, std::size_t m, const std::string& path) {
  const std::string kind =
      field(j, "kind", path).get<std::string>();
  PlcUtility plc;
  if (kind == "linear_matching") {
    Vec a = vec_at(field(j, "a", path), path + ".a");
    require_width(a, m, path + ".a");
    plc.pieces.push_back({std::move(a), 0.0});
    return plc;
  }
  if (kind != "plc") throw SchemaError(path + ".kind: unsupported \"" + kind +
                                       "\" (want plc or linear_matching)");
  const json& pieces = field(j, "pieces", path);
  if (!pieces.is_array()) wrong_type(path + ".pieces", "array", pieces);
  if (pieces.empty())
    throw InvariantError(path + ".pieces: at least one piece required");
  for (std::size_t l = 0; l < pieces.size(); ++l) {
    const std::string ppath = idx(path + ".pieces", l);
    Vec a = vec_at(field(pieces[l], "a", ppath), ppath + ".a");
    require_width(a, m, ppath + ".a");
    const double beta = number_at(field(pieces[l], "b", ppath), ppath + ".b");
    plc.pieces.push_back({std::move(a), beta});
  }
  return plc;
}

CplcUtility cplc_at(const json& j, std::size_t m, const std::string& path) {
  const json& kind_j = field(j, "kind", path);
  if (!kind_j.is_string()) wrong_type(path + ".kind", "string", kind_j);
  const std::string kind = kind_j.get<std::string>();
  if (kind == "plc" || kind == "linear_matching") {
    PlcUtility plc = plc_at(j, m, path);
    if (plc.pieces.size() == 1 && plc.pieces[0].beta == 0.0) {
      CplcUtility u;
      u.q = std::move(plc.pieces[0].a);
      return u;
    }
    return plc_to_cplc(plc, m);
  }
  if (kind != "cplc")
    throw SchemaError(path + ".kind: unsupported \"" + kind + "\"");
  CplcUtility u;
  u.q = vec_at(field(j, "q", path), path + ".q");
  require_width(u.q, m, path + ".q");
  const auto optional_vec = [&](const char* key) {
    const auto it = j.find(key);
    return it == j.end() ? Vec{} : vec_at(*it, path + "." + key);
  };
  const auto optional_mat = [&](const char* key) {
    const auto it = j.find(key);
    return it == j.end() ? Mat{} : mat_at(*it, path + "." + key);
  };
  u.s = optional_vec("s");
  u.A = optional_mat("A");
  u.B = optional_mat("B");
  u.b = optional_vec("b");
  try {
    validate_utility(u);
  } catch (const MarketError& e) {
    throw InvariantError(path + ": " + e.what());
  }
  return u;
}

const json& agents_at(const json& root, std::size_t* m) {
  *m = count_at(field(root, "num_items", ""), ".num_items");
  if (*m == 0) throw InvariantError(".num_items: at least one item required");
  const json& agents = field(root, "agents", "");
  if (!agents.is_array()) wrong_type(".agents", "array", agents);
  if (agents.empty())
    throw InvariantError(".agents: at least one agent required");
  return agents;
}

FisherMarket fisher_at(const json& root) {
  FisherMarket market;
  const json& agents = agents_at(root, &market.num_items);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string path = idx(".agents", i);
    const double budget = number_at(field(agents[i], "budget", path),
                                    path + ".budget");
    if (!(budget >= 0.0))
      throw InvariantError(path + ".budget: must be nonnegative");
    market.agents.push_back(
        {budget, cplc_at(field(agents[i], "utility", path), market.num_items,
                         path + ".utility")});
  }
  if (!(market.sum_budgets() > 0.0))
    throw InvariantError(".agents: total budget must be positive");
  return market;
}

MatchingMarket matching_at(const json& root) {
  MatchingMarket mm;
  const json& agents = agents_at(root, &mm.num_items);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string path = idx(".agents", i);
    mm.utilities.push_back(plc_at(field(agents[i], "utility", path),
                                  mm.num_items, path + ".utility"));
  }
  if (mm.utilities.size() > mm.num_items)
    throw InvariantError(
        ".agents: a one-unit-each matching needs at least as many items "
        "as agents");
  return mm;
}

AdMarket ad_at(const json& root) {
  AdMarket ad;
  const json& agents = agents_at(root, &ad.num_items);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string path = idx(".agents", i);
    Vec e = vec_at(field(agents[i], "endowment", path), path + ".endowment");
    require_width(e, ad.num_items, path + ".endowment");
    ad.agents.push_back(
        {std::move(e), plc_at(field(agents[i], "utility", path),
                              ad.num_items, path + ".utility")});
  }
  try {
    validate_ad_market(ad);
  } catch (const MarketError& e) {
    throw InvariantError(std::string(".agents: ") + e.what());
  }
  return ad;
}

json plc_json(const PlcUtility& plc) {
  json pieces = json::array();
  for (const auto& piece : plc.pieces)
    pieces.push_back({{"a", piece.a}, {"b", piece.beta}});
  return {{"kind", "plc"}, {"pieces", std::move(pieces)}};
}

json instance_json(const Instance& instance) {
  json root;
  json agents = json::array();
  if (const auto* fisher = std::get_if<FisherMarket>(&instance)) {
    root["model"] = "fisher";
    root["num_items"] = fisher->num_items;
    for (const auto& agent : fisher->agents) {
      const auto& u = agent.utility;
      agents.push_back({{"budget", agent.budget},
                        {"utility",
                         {{"kind", "cplc"},
                          {"q", u.q},
                          {"s", u.s},
                          {"A", u.A},
                          {"B", u.B},
                          {"b", u.b}}}});
    }
  } else if (const auto* mm = std::get_if<MatchingMarket>(&instance)) {
    root["model"] = "matching";
    root["num_items"] = mm->num_items;
    for (const auto& plc : mm->utilities)
      agents.push_back({{"utility", plc_json(plc)}});
  } else {
    const auto& ad = std::get<AdMarket>(instance);
    root["model"] = "arrow_debreu";
    root["num_items"] = ad.num_items;
    for (const auto& agent : ad.agents)
      agents.push_back({{"endowment", agent.endowment},
                        {"utility", plc_json(agent.utility)}});
  }
  root["agents"] = std::move(agents);
  return root;
}

json candidate_json(const EquilibriumCandidate& cand) {
  return {{"x", cand.x},
          {"p", cand.p},
          {"sigma", cand.sigma},
          {"lambda", cand.lambda},
          {"thrifty", cand.thrifty}};
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

Instance parse_instance(const std::string& text) {
  const json root = parse_text(text);
  const json& model_j = field(root, "model", "");
  if (!model_j.is_string()) wrong_type(".model", "string", model_j);
  const std::string model = model_j.get<std::string>();
  if (model == "fisher") return fisher_at(root);
  if (model == "matching") return matching_at(root);
  if (model == "arrow_debreu") return ad_at(root);
  throw SchemaError(".model: unknown model \"" + model + "\"");
}

std::string serialize_instance(const Instance& instance) {
  return instance_json(instance).dump(2) + "\n";
}

EquilibriumCandidate parse_candidate(const std::string& text) {
  const json root = parse_text(text);
  EquilibriumCandidate cand;
  cand.x = mat_at(field(root, "x", ""), ".x");
  cand.p = vec_at(field(root, "p", ""), ".p");
  if (const auto it = root.find("sigma"); it != root.end())
    cand.sigma = number_at(*it, ".sigma");
  if (const auto it = root.find("lambda"); it != root.end())
    cand.lambda = number_at(*it, ".lambda");
  if (const auto it = root.find("thrifty"); it != root.end()) {
    if (!it->is_boolean()) wrong_type(".thrifty", "boolean", *it);
    cand.thrifty = it->get<bool>();
  }
  return cand;
}

std::string serialize_candidate(const EquilibriumCandidate& cand) {
  return candidate_json(cand).dump(2) + "\n";
}

std::string serialize_report(const VerificationReport& report) {
  const json j = {{"pass", report.pass},
                  {"utility_gap", report.utility_gap},
                  {"budget_excess", report.budget_excess},
                  {"thrifty_excess", report.thrifty_excess},
                  {"clearing_slack", report.clearing_slack},
                  {"oversupply", report.oversupply},
                  {"min_allocation", report.min_allocation},
                  {"matching_defect", report.matching_defect},
                  {"min_price", report.min_price},
                  {"price_total", report.price_total}};
  return j.dump(2) + "\n";
}

std::string serialize_nonconvexity_fixture() {
  const NonconvexityFixture f = nonconvexity_fixture();
  const json j = {{"version", 1},
                  {"instance", instance_json(f.market)},
                  {"low", candidate_json(f.low)},
                  {"high", candidate_json(f.high)},
                  {"midpoint_price", f.midpoint_price},
                  {"midpoint_allocation", f.midpoint_allocation}};
  return j.dump(2) + "\n";
}

}  // namespace marketeq
