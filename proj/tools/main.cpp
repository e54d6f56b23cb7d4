#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "marketeq/arrow_debreu.hpp"
#include "marketeq/fisher_fixed_agents.hpp"
#include "marketeq/fisher_fixed_items.hpp"
#include "marketeq/io.hpp"
#include "marketeq/matching.hpp"
#include "marketeq/oracle.hpp"
#include "marketeq/verify.hpp"

namespace {

using namespace marketeq;

// MARKETEQ_LOG selects stderr verbosity: error (default), info, debug.
int verbosity() {
  static const int level = [] {
    const char* env = std::getenv("MARKETEQ_LOG");
    if (env == nullptr) return 0;
    const std::string v = env;
    if (v == "error") return 0;
    if (v == "info") return 1;
    if (v == "debug") return 2;
    std::cerr << "marketeq: unknown MARKETEQ_LOG value \"" << v
              << "\", using error\n";
    return 0;
  }();
  return level;
}

void info(const std::string& line) {
  if (verbosity() >= 1) std::cerr << line << "\n";
}

void debug(const std::string& line) {
  if (verbosity() >= 2) std::cerr << line << "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MarketError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw MarketError("cannot write " + path);
  info("wrote " + path);
}

// JSON results go to --output when given, stdout otherwise; tables and
// diagnostics go to stderr so stdout stays machine-readable.
void emit(const std::string& text, const std::string& output_path) {
  if (output_path.empty())
    std::cout << text;
  else
    write_file(output_path, text);
}

double max_entry(const Vec& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

enum class Model { fisher, matching, arrow_debreu };

void print_report(const VerificationReport& r, Model model, bool thrifty) {
  const auto row = [](const char* name, double value) {
    std::fprintf(stderr, "  %-22s %12.5g\n", name, value);
  };
  row("worst utility gap", max_entry(r.utility_gap));
  row("worst budget excess", max_entry(r.budget_excess));
  if (thrifty) row("worst thrifty excess", max_entry(r.thrifty_excess));
  row("unsold value", r.clearing_slack);
  row("oversupply", r.oversupply);
  row("lowest holding", r.min_allocation);
  if (model == Model::matching) {
    row("matching defect", r.matching_defect);
    row("lowest price", r.min_price);
  }
  if (model == Model::arrow_debreu) row("price total", r.price_total);
  std::fprintf(stderr, "  %-22s %12s\n", "verdict", r.pass ? "PASS" : "FAIL");
}

void log_stats(const SearchStats& stats,
               std::chrono::steady_clock::time_point start) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  info("searched " + std::to_string(stats.probes) + " of " +
       std::to_string(stats.grid_points) + " grid points, " +
       std::to_string(stats.lp_count) + " programs, " + std::to_string(ms) +
       " ms");
}

Mat select_rows(const Mat& x, const std::vector<std::size_t>& kept) {
  Mat out;
  out.reserve(kept.size());
  for (const std::size_t i : kept) {
    if (i >= x.size()) throw DimensionMismatch("candidate has too few rows");
    out.push_back(x[i]);
  }
  return out;
}

Mat expand_rows(const Mat& x, const std::vector<std::size_t>& kept,
                std::size_t rows, std::size_t cols) {
  Mat out(rows, Vec(cols, 0.0));
  for (std::size_t k = 0; k < kept.size(); ++k) out[kept[k]] = x[k];
  return out;
}

// Agents whose utility never clears the feasibility floor get dropped
// before solving and re-inserted as zero rows; zero consumption is optimal
// for them at any prices, so verdicts are unaffected.
NormalizedFisher normalized(const FisherMarket& market) {
  NormalizedFisher norm = normalize_market(market);
  for (std::size_t k = 0; k < norm.kept.size(); ++k)
    debug("agent " + std::to_string(norm.kept[k]) + " utility scale " +
          std::to_string(norm.vmax[norm.kept[k]]));
  for (const std::size_t i : norm.removed)
    info("agent " + std::to_string(i) + " wants nothing, dropped");
  return norm;
}

struct SolveArgs {
  std::string input, output, mode;
  std::optional<double> epsilon, sigma;
  unsigned threads = 0;
};

int run_solve(const SolveArgs& args) {
  const Instance instance = parse_instance(read_file(args.input));
  const bool items_mode =
      args.mode == "fixed-items" || args.mode == "matching-fixed-items";
  if (items_mode && args.sigma)
    throw MarketError("mode " + args.mode + " takes --epsilon, not --sigma");
  if (!items_mode && args.epsilon)
    throw MarketError("mode " + args.mode + " takes --sigma, not --epsilon");

  const auto start = std::chrono::steady_clock::now();
  SearchStats stats;
  std::optional<EquilibriumCandidate> cand;
  VerificationReport report;
  Model model = Model::fisher;

  if (args.mode == "fixed-items" || args.mode == "fixed-agents") {
    const auto* market = std::get_if<FisherMarket>(&instance);
    if (market == nullptr)
      throw MarketError("mode " + args.mode + " needs a fisher instance");
    const NormalizedFisher norm = normalized(*market);
    if (args.mode == "fixed-items") {
      FixedItemsOptions opts;
      if (args.epsilon) opts.epsilon = *args.epsilon;
      opts.threads = args.threads;
      cand = solve_fixed_items(norm.market, opts, &stats);
    } else {
      FixedAgentsOptions opts;
      if (args.sigma) opts.sigma = *args.sigma;
      opts.threads = args.threads;
      cand = solve_fixed_agents(norm.market, opts, &stats);
    }
    if (cand) {
      report = verify_fisher(norm.market, cand->x, cand->p, cand->sigma,
                             cand->lambda, cand->thrifty);
      cand->x = expand_rows(cand->x, norm.kept, market->agents.size(),
                            market->num_items);
    }
  } else if (args.mode == "matching-fixed-items" ||
             args.mode == "matching-fixed-agents" ||
             args.mode == "hz-thrifty") {
    model = Model::matching;
    const auto* mm = std::get_if<MatchingMarket>(&instance);
    if (mm == nullptr)
      throw MarketError("mode " + args.mode + " needs a matching instance");
    if (args.mode == "matching-fixed-items") {
      MatchingFixedItemsOptions opts;
      if (args.epsilon) opts.epsilon = *args.epsilon;
      opts.threads = args.threads;
      cand = solve_matching_fixed_items(*mm, opts, &stats);
    } else {
      MatchingFixedAgentsOptions opts;
      if (args.sigma) opts.sigma = *args.sigma;
      opts.threads = args.threads;
      cand = args.mode == "hz-thrifty"
                 ? solve_hz_thrifty_fixed_agents(*mm, opts, &stats)
                 : solve_matching_fixed_agents(*mm, opts, &stats);
    }
    if (cand)
      report = verify_matching(*mm, cand->x, cand->p, cand->sigma,
                               cand->lambda, cand->thrifty);
  } else {
    model = Model::arrow_debreu;
    const auto* ad = std::get_if<AdMarket>(&instance);
    if (ad == nullptr)
      throw MarketError("mode " + args.mode + " needs an arrow_debreu "
                        "instance");
    if (args.mode == "ad-fixed-agents") {
      AdFixedAgentsOptions opts;
      if (args.sigma) opts.sigma = *args.sigma;
      opts.threads = args.threads;
      cand = solve_ad_fixed_agents(*ad, opts, &stats);
    } else {
      AdFixedItemsOptions opts;
      if (args.sigma) opts.sigma = *args.sigma;
      opts.threads = args.threads;
      cand = solve_ad_fixed_items(*ad, opts, &stats);
    }
    if (cand)
      report = verify_ad(*ad, cand->x, cand->p, cand->sigma, cand->lambda);
  }

  log_stats(stats, start);
  if (!cand) {
    std::cerr << "marketeq: no acceptable point in the search grid\n";
    return 2;
  }
  info("candidate levels: sigma " + std::to_string(cand->sigma) +
       ", lambda " + std::to_string(cand->lambda) +
       (cand->thrifty ? ", thrifty" : ""));
  emit(serialize_candidate(*cand), args.output);
  print_report(report, model, cand->thrifty);
  return report.pass ? 0 : 2;
}

struct VerifyArgs {
  std::string input, candidate, output;
  std::optional<double> sigma, lambda;
  std::optional<bool> thrifty;
};

int run_verify(const VerifyArgs& args) {
  const Instance instance = parse_instance(read_file(args.input));
  const EquilibriumCandidate cand = parse_candidate(read_file(args.candidate));
  const double sigma = args.sigma.value_or(cand.sigma);
  const double lambda = args.lambda.value_or(cand.lambda);
  const bool thrifty = args.thrifty.value_or(cand.thrifty);

  VerificationReport report;
  Model model = Model::fisher;
  if (const auto* market = std::get_if<FisherMarket>(&instance)) {
    const NormalizedFisher norm = normalized(*market);
    const Mat x = cand.x.size() == market->agents.size()
                      ? select_rows(cand.x, norm.kept)
                      : cand.x;
    report = verify_fisher(norm.market, x, cand.p, sigma, lambda, thrifty);
  } else if (const auto* mm = std::get_if<MatchingMarket>(&instance)) {
    model = Model::matching;
    report = verify_matching(*mm, cand.x, cand.p, sigma, lambda, thrifty);
  } else {
    model = Model::arrow_debreu;
    if (thrifty)
      throw MarketError("thrifty spending does not apply to exchange "
                        "markets");
    report = verify_ad(std::get<AdMarket>(instance), cand.x, cand.p, sigma,
                       lambda);
  }
  if (!args.output.empty()) write_file(args.output, serialize_report(report));
  print_report(report, model, thrifty);
  return report.pass ? 0 : 2;
}

struct OracleArgs {
  std::string input, output;
  double step = 0.0;
  bool zero_price = false;
};

int run_oracle(const OracleArgs& args) {
  const Instance instance = parse_instance(read_file(args.input));
  FisherMarket market;
  if (const auto* fisher = std::get_if<FisherMarket>(&instance)) {
    market = normalized(*fisher).market;
  } else if (const auto* mm = std::get_if<MatchingMarket>(&instance)) {
    market = relax_to_partial(*mm);
  } else {
    throw MarketError("the residual oracle covers fisher and matching "
                      "instances only");
  }
  std::function<bool(const Vec&)> filter;
  if (args.zero_price)
    filter = [](const Vec& p) {
      return *std::min_element(p.begin(), p.end()) == 0.0;
    };
  const auto start = std::chrono::steady_clock::now();
  const OracleResult best = oracle_grid_search(market, args.step, filter);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  info("scanned the price lattice in " + std::to_string(ms) + " ms");

  EquilibriumCandidate as_candidate;
  as_candidate.x = best.x;
  as_candidate.p = best.p;
  as_candidate.sigma = best.residual;
  as_candidate.lambda = best.residual;
  as_candidate.thrifty = true;
  emit(serialize_candidate(as_candidate), args.output);
  std::fprintf(stderr, "  %-22s %12.5g\n", "best residual", best.residual);
  return 0;
}

int run_fixtures(const std::string& dir) {
  const NonconvexityFixture f = nonconvexity_fixture();
  write_file(dir + "/nonconvexity.json", serialize_nonconvexity_fixture());
  write_file(dir + "/nonconvexity_instance.json",
             serialize_instance(f.market));
  write_file(dir + "/nonconvexity_low.json", serialize_candidate(f.low));
  write_file(dir + "/nonconvexity_high.json", serialize_candidate(f.high));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate market equilibria: solve, verify, audit"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  CLI::App* solve = app.add_subcommand(
      "solve", "Search for an approximate equilibrium");
  solve->add_option("--input", solve_args.input, "instance JSON")->required();
  solve->add_option("--mode", solve_args.mode, "search scheme")
      ->required()
      ->check(CLI::IsMember({"fixed-items", "fixed-agents",
                             "matching-fixed-items", "matching-fixed-agents",
                             "hz-thrifty", "ad-fixed-agents",
                             "ad-fixed-items"}));
  solve->add_option("--epsilon", solve_args.epsilon,
                    "target level for the price-grid schemes");
  solve->add_option("--sigma", solve_args.sigma,
                    "target level for the guess-based schemes");
  solve->add_option("--threads", solve_args.threads,
                    "worker threads, 0 = all hardware threads");
  solve->add_option("--output", solve_args.output, "candidate JSON path");

  VerifyArgs verify_args;
  CLI::App* verify = app.add_subcommand(
      "verify", "Check a candidate against an instance");
  verify->add_option("--input", verify_args.input, "instance JSON")
      ->required();
  verify->add_option("--candidate", verify_args.candidate, "candidate JSON")
      ->required();
  verify->add_option("--sigma", verify_args.sigma,
                     "money threshold, default: the candidate's");
  verify->add_option("--lambda", verify_args.lambda,
                     "utility threshold, default: the candidate's");
  bool thrifty_flag = false;
  CLI::Option* thrifty_opt = verify->add_flag(
      "--thrifty,!--no-thrifty", thrifty_flag,
      "require thrifty spending, default: the candidate's");
  verify->add_option("--output", verify_args.output, "report JSON path");

  OracleArgs oracle_args;
  CLI::App* oracle = app.add_subcommand(
      "oracle", "Exhaustive residual scan over a price lattice");
  oracle->add_option("--input", oracle_args.input, "instance JSON")
      ->required();
  oracle->add_option("--step", oracle_args.step, "lattice pitch")->required();
  oracle->add_flag("--zero-price", oracle_args.zero_price,
                   "only lattice points with some zero price");
  oracle->add_option("--output", oracle_args.output, "result JSON path");

  std::string fixtures_dir = ".";
  CLI::App* fixtures = app.add_subcommand(
      "fixtures", "Write the bundled example files");
  fixtures->add_option("--dir", fixtures_dir, "target directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    if (*solve) return run_solve(solve_args);
    if (*verify) {
      if (thrifty_opt->count() > 0) verify_args.thrifty = thrifty_flag;
      return run_verify(verify_args);
    }
    if (*oracle) return run_oracle(oracle_args);
    return run_fixtures(fixtures_dir);
  } catch (const lp::MalformedProgram& e) {
    std::cerr << "marketeq: internal: " << e.what() << "\n";
    return 4;
  } catch (const lp::NumericalStall& e) {
    std::cerr << "marketeq: " << e.what() << "\n";
    return 4;
  } catch (const NotFound& e) {
    std::cerr << "marketeq: " << e.what() << "\n";
    return 2;
  } catch (const MarketError& e) {
    std::cerr << "marketeq: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "marketeq: internal: " << e.what() << "\n";
    return 4;
  }
}
