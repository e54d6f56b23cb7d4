#include "marketeq/lp_solver.hpp"

#include <cmath>
#include <cstring>
#include <random>

#include "doctest.h"
#include "support.hpp"

using namespace marketeq;
using namespace marketeq::lp;

TEST_CASE("two-variable maximization lands on the right vertex") {
  LinearProgram lp;
  lp.sense = Sense::maximize;
  lp.objective = {3.0, 1.0};
  lp.add_row({1.0, 1.0}, Relation::less_equal, 2.0);
  lp.add_row({1.0, 0.0}, Relation::less_equal, 1.0);

  const auto out = solve_lp(lp);
  REQUIRE(out.status == LpStatus::optimal);
  CHECK(out.objective == doctest::Approx(4.0));
  CHECK(out.x[0] == doctest::Approx(1.0));
  CHECK(out.x[1] == doctest::Approx(1.0));
  // dual objective matches: y = (1, 2)
  CHECK(out.duals[0] == doctest::Approx(1.0));
  CHECK(out.duals[1] == doctest::Approx(2.0));
}

TEST_CASE("contradictory bounds are infeasible") {
  LinearProgram lp;
  lp.sense = Sense::maximize;
  lp.objective = {1.0};
  lp.add_row({1.0}, Relation::greater_equal, 1.0);
  lp.add_row({1.0}, Relation::less_equal, 0.0);
  CHECK(solve_lp(lp).status == LpStatus::infeasible);
}

TEST_CASE("maximizing an unconstrained variable is unbounded") {
  LinearProgram lp;
  lp.sense = Sense::maximize;
  lp.objective = {1.0};
  CHECK(solve_lp(lp).status == LpStatus::unbounded);
}

TEST_CASE("minimization with covering rows and exact duals") {
  LinearProgram lp;
  lp.sense = Sense::minimize;
  lp.objective = {2.0, 3.0};
  lp.add_row({1.0, 1.0}, Relation::greater_equal, 4.0);
  lp.add_row({1.0, 3.0}, Relation::greater_equal, 6.0);

  const auto out = solve_lp(lp);
  REQUIRE(out.status == LpStatus::optimal);
  CHECK(out.objective == doctest::Approx(9.0));
  CHECK(out.x[0] == doctest::Approx(3.0));
  CHECK(out.x[1] == doctest::Approx(1.0));
  CHECK(out.duals[0] == doctest::Approx(1.5));
  CHECK(out.duals[1] == doctest::Approx(0.5));
}

TEST_CASE("equality rows and free variables") {
  LinearProgram lp;
  lp.sense = Sense::maximize;
  lp.objective = {1.0, 1.0, 0.0};
  lp.domains = {VarDomain::nonnegative, VarDomain::nonnegative,
                VarDomain::free_var};
  lp.add_row({1.0, 1.0, 1.0}, Relation::equal, 1.0);
  lp.add_row({0.0, 0.0, 1.0}, Relation::greater_equal, -2.0);
  lp.add_row({1.0, 0.0, 0.0}, Relation::less_equal, 5.0);

  const auto out = solve_lp(lp);
  REQUIRE(out.status == LpStatus::optimal);
  // x3 pushed to its lower bound -2, leaving 3 to split between x1, x2.
  CHECK(out.objective == doctest::Approx(3.0));
  CHECK(out.x[2] == doctest::Approx(-2.0));
  const double dual_val = dot(out.duals, lp.row_rhs);
  CHECK(dual_val == doctest::Approx(out.objective));
}

TEST_CASE("negative rhs rows get normalized correctly") {
  LinearProgram lp;
  lp.sense = Sense::maximize;
  lp.objective = {1.0};
  lp.add_row({-1.0}, Relation::greater_equal, -3.0);  // x <= 3
  const auto out = solve_lp(lp);
  REQUIRE(out.status == LpStatus::optimal);
  CHECK(out.objective == doctest::Approx(3.0));
  CHECK(dot(out.duals, lp.row_rhs) == doctest::Approx(3.0));
}

TEST_CASE("redundant equality rows are tolerated") {
  LinearProgram lp;
  lp.sense = Sense::minimize;
  lp.objective = {1.0, 2.0};
  lp.add_row({1.0, 1.0}, Relation::equal, 2.0);
  lp.add_row({2.0, 2.0}, Relation::equal, 4.0);  // dependent duplicate
  lp.add_row({1.0, 0.0}, Relation::less_equal, 1.5);
  const auto out = solve_lp(lp);
  REQUIRE(out.status == LpStatus::optimal);
  CHECK(out.objective == doctest::Approx(1.5 + 2.0 * 0.5));
  CHECK(dot(out.duals, lp.row_rhs) ==
        doctest::Approx(out.objective).epsilon(1e-8));
}

TEST_CASE("degenerate program solves without cycling") {
  // Classic highly degenerate setup: many rows tight at the origin.
  LinearProgram lp;
  lp.sense = Sense::maximize;
  lp.objective = {0.75, -150.0, 0.02, -6.0};
  lp.add_row({0.25, -60.0, -0.04, 9.0}, Relation::less_equal, 0.0);
  lp.add_row({0.5, -90.0, -0.02, 3.0}, Relation::less_equal, 0.0);
  lp.add_row({0.0, 0.0, 1.0, 0.0}, Relation::less_equal, 1.0);
  const auto out = solve_lp(lp);
  REQUIRE(out.status == LpStatus::optimal);
  CHECK(out.objective == doctest::Approx(0.05));
}

TEST_CASE("check_feasible returns a point and ignores optimality") {
  LinearProgram lp;
  lp.sense = Sense::maximize;
  lp.objective = {10.0, 0.0};
  lp.add_row({1.0, 1.0}, Relation::equal, 1.0);
  const auto out = check_feasible(lp);
  REQUIRE(out.status == LpStatus::optimal);
  CHECK(out.x[0] + out.x[1] == doctest::Approx(1.0));
  CHECK(out.x[0] >= -1e-9);
  CHECK(out.x[1] >= -1e-9);

  LinearProgram bad;
  bad.sense = Sense::minimize;
  bad.objective = {0.0};
  bad.add_row({1.0}, Relation::less_equal, 0.0);
  bad.add_row({1.0}, Relation::greater_equal, 1.0);
  CHECK(check_feasible(bad).status == LpStatus::infeasible);
}

TEST_CASE("dimension mismatches are rejected") {
  LinearProgram lp;
  lp.sense = Sense::maximize;
  lp.objective = {1.0, 1.0};
  lp.row_coeffs.push_back({1.0});  // too short
  lp.row_relations.push_back(Relation::less_equal);
  lp.row_rhs.push_back(1.0);
  CHECK_THROWS_AS(solve_lp(lp), MalformedProgram);

  LinearProgram nan_lp;
  nan_lp.objective = {std::nan("")};
  CHECK_THROWS_AS(solve_lp(nan_lp), MalformedProgram);
}

TEST_CASE("random boxed programs: oracle agreement, duality, determinism") {
  std::mt19937_64 rng(20240817);
  std::size_t optimal_seen = 0;
  for (int iter = 0; iter < 200; ++iter) {
    const auto lp = testsupport::random_boxed_lp(rng);
    const auto out = solve_lp(lp);
    const auto oracle = testsupport::vertex_enumeration_oracle(lp);

    REQUIRE(out.status != LpStatus::unbounded);
    REQUIRE((out.status == LpStatus::optimal) == oracle.feasible);
    if (out.status != LpStatus::optimal) continue;
    ++optimal_seen;

    CHECK(std::abs(out.objective - oracle.objective) <=
          1e-6 * (1.0 + std::abs(oracle.objective)));

    // strong duality, within the advertised tolerance
    const double dual_val = dot(out.duals, lp.row_rhs);
    CHECK(std::abs(dual_val - out.objective) <=
          kDualTol * (1.0 + std::abs(out.objective)));

    // primal feasibility of the returned point
    for (std::size_t i = 0; i < lp.num_rows(); ++i) {
      const double slack = dot(lp.row_coeffs[i], out.x) - lp.row_rhs[i];
      const double tol = kFeasTol * (1.0 + std::abs(lp.row_rhs[i]));
      if (lp.row_relations[i] == Relation::less_equal) CHECK(slack <= tol);
      if (lp.row_relations[i] == Relation::greater_equal) CHECK(slack >= -tol);
      if (lp.row_relations[i] == Relation::equal) CHECK(std::abs(slack) <= tol);
    }

    // bitwise determinism of a repeated solve
    const auto again = solve_lp(lp);
    REQUIRE(again.x.size() == out.x.size());
    CHECK(std::memcmp(again.x.data(), out.x.data(),
                      out.x.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(again.duals.data(), out.duals.data(),
                      out.duals.size() * sizeof(double)) == 0);
  }
  // the generator seeds every program with a feasible point
  CHECK(optimal_seen == 200);
}
