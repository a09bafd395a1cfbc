#include <cmath>

#include "doctest.h"
#include "roboscript/solver.hpp"
#include "support/lp_oracle.hpp"

using namespace roboscript::solver;

namespace {

Solver load(const oracle::System& s) {
  Solver solver;
  for (int j = 0; j < s.num_vars; ++j) solver.add_variable("v" + std::to_string(j));
  for (const auto& c : s.constraints) solver.add_constraint(c);
  return solver;
}

}  // namespace

TEST_CASE("add_variable hands out distinct ids") {
  Solver s;
  const Variable a = s.add_variable("a");
  const Variable b = s.add_variable("b");
  CHECK(a != b);
  CHECK(s.label(b) == "b");
  CHECK(s.value(a) == 0.0);  // initial stay
}

TEST_CASE("single required equality") {
  Solver s;
  const Variable x = s.add_variable("x");
  s.add_constraint(make_constraint(x, Relation::kEq, 0.5));
  const auto& sol = s.solve();
  CHECK(sol.value(x) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.value(x) == doctest::Approx(0.5));
}

TEST_CASE("midpoint of two pinned variables") {
  Solver s;
  const Variable a = s.add_variable("a");
  const Variable b = s.add_variable("b");
  const Variable c = s.add_variable("c");
  s.add_constraint(make_constraint(a, Relation::kEq, -0.5));
  s.add_constraint(make_constraint(c, Relation::kEq, 0.5));
  s.add_constraint(make_constraint(b, Relation::kEq, (LinearExpr(a) + LinearExpr(c)) * 0.5));
  s.solve();
  CHECK(std::abs(s.value(b)) < 1e-12);
}

TEST_CASE("contradictory equalities are infeasible and keep the previous assignment") {
  Solver s;
  const Variable x = s.add_variable("x");
  s.add_constraint(make_constraint(x, Relation::kEq, 0.0));
  s.add_constraint(make_constraint(x, Relation::kEq, 1.0));
  CHECK_THROWS_AS(s.solve(), Infeasible);
  CHECK(s.value(x) == 0.0);
}

TEST_CASE("inequality against the stay lands on the boundary") {
  Solver s;
  const Variable x = s.add_variable("x");
  s.add_constraint(make_constraint(x, Relation::kGe, 0.3));
  s.solve();
  CHECK(s.value(x) == doctest::Approx(0.3).epsilon(1e-12));
  // Independent check of the same instance.
  oracle::System sys{1, {oracle::make({1.0}, -0.3, Relation::kGe, Strength::kRequired)}};
  std::vector<double> arg;
  CHECK(oracle::vertex_enumeration(sys, &arg) == doctest::Approx(0.3));
  CHECK(arg[0] == doctest::Approx(0.3));
  CHECK(oracle::grid_search(sys) == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("unknown variables are rejected") {
  Solver s;
  s.add_variable("x");
  CHECK_THROWS_AS(s.add_constraint(make_constraint(Variable{7}, Relation::kEq, 1.0)), UnknownVariable);
  CHECK_THROWS_AS(s.value(Variable{3}), UnknownVariable);
}

TEST_CASE("weak equality trades off against the stay") {
  Solver s;
  const Variable x = s.add_variable("x");
  const Variable y = s.add_variable("y");
  s.add_constraint(make_constraint(x, Relation::kEq, 0.5, Strength::kWeak));
  s.add_constraint(make_constraint(LinearExpr(x) + LinearExpr(y), Relation::kEq, 0.5, Strength::kWeak));
  s.add_constraint(make_constraint(y, Relation::kEq, 0.5, Strength::kWeak));
  const auto& sol = s.solve();
  oracle::System sys{2,
                     {oracle::make({1, 0}, -0.5, Relation::kEq, Strength::kWeak),
                      oracle::make({1, 1}, -0.5, Relation::kEq, Strength::kWeak),
                      oracle::make({0, 1}, -0.5, Relation::kEq, Strength::kWeak)}};
  CHECK(sol.objective() == doctest::Approx(oracle::vertex_enumeration(sys)).epsilon(1e-9));
}

TEST_CASE("re-solving after new constraints uses the previous solution as stays") {
  // Two-phase program: read the first solution, then constrain relative to it.
  Solver s;
  const Variable a = s.add_variable("a");
  const Variable b = s.add_variable("b");
  s.add_constraint(make_constraint(a, Relation::kEq, 0.6));
  s.solve();
  CHECK(s.value(b) == 0.0);
  const double a_now = s.value(a);
  s.add_constraint(make_constraint(b, Relation::kEq, LinearExpr(a_now - 0.3)));
  CHECK(s.dirty());
  s.solve();
  CHECK(s.value(a) == doctest::Approx(0.6));
  CHECK(s.value(b) == doctest::Approx(0.3));
  // A variable added after the solve reads 0 until the next solve.
  const Variable c = s.add_variable("c");
  CHECK(s.value(c) == 0.0);
  CHECK(s.value(a) == doctest::Approx(0.6));
}

TEST_CASE("ten thousand variables") {
  Solver s;
  std::vector<Variable> vars;
  for (int i = 0; i < 10000; ++i) vars.push_back(s.add_variable("v" + std::to_string(i)));
  for (int i = 1; i < 10000; i += 2) {
    s.add_constraint(make_constraint(vars[static_cast<std::size_t>(i)], Relation::kEq,
                                     LinearExpr(vars[static_cast<std::size_t>(i - 1)]) + 0.01));
  }
  s.add_constraint(make_constraint(vars[0], Relation::kEq, 0.25));
  s.solve();
  CHECK(s.value(vars[0]) == doctest::Approx(0.25));
  CHECK(s.value(vars[1]) == doctest::Approx(0.26));
  for (int i = 1; i < 10000; i += 2) {
    const double lo = s.value(vars[static_cast<std::size_t>(i - 1)]);
    const double hi = s.value(vars[static_cast<std::size_t>(i)]);
    REQUIRE(std::abs(hi - lo - 0.01) < 1e-9);
  }
}

TEST_CASE("soundness and optimality against the vertex oracle") {
  roboscript::Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const auto sys = oracle::random_system(rng);
    Solver solver = load(sys);
    const auto& sol = solver.solve();
    for (const auto& c : sys.constraints) {
      if (c.strength == Strength::kRequired) REQUIRE(violation(c, sol.values()) <= kFeasibilityTolerance);
    }
    const double expected = oracle::vertex_enumeration(sys);
    REQUIRE(std::abs(sol.objective() - expected) <= 2e-3);
  }
}

TEST_CASE("optimality against the 1e-3 grid search") {
  roboscript::Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const auto sys = oracle::random_grid_system(rng);
    Solver solver = load(sys);
    const auto& sol = solver.solve();
    REQUIRE(std::abs(sol.objective() - oracle::grid_search(sys)) <= 2e-3);
  }
}

TEST_CASE("determinism and monotone re-solve") {
  roboscript::Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto sys = oracle::random_system(rng);
    Solver a = load(sys);
    Solver b = load(sys);
    REQUIRE(a.solve().values() == b.solve().values());
    // Adding a constraint on a fresh solver never lowers the optimum.
    auto extra = oracle::random_system(rng);
    if (extra.num_vars > sys.num_vars) continue;
    const double before = load(sys).solve().objective();
    auto bigger = sys;
    bigger.constraints.push_back(extra.constraints.front());
    Solver c = load(bigger);
    double after = 0.0;
    try {
      after = c.solve().objective();
    } catch (const Infeasible&) {
      continue;  // an empty feasible set is trivially monotone
    }
    REQUIRE(after >= before - 1e-9);
  }
}
