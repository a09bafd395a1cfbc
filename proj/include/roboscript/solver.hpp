#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "roboscript/error.hpp"

namespace roboscript::solver {

inline constexpr double kFeasibilityTolerance = 1e-6;

class Infeasible : public Error {
 public:
  explicit Infeasible(const std::string& m) : Error("InfeasibleConstraints", m) {}
};

class UnknownVariable : public Error {
 public:
  explicit UnknownVariable(const std::string& m) : Error("UnknownVariable", m) {}
};

struct Variable {
  std::uint32_t id = 0;
  friend auto operator<=>(const Variable&, const Variable&) = default;
};

// sum(coef * var) + constant. Zero coefficients are never stored.
class LinearExpr {
 public:
  LinearExpr() = default;
  LinearExpr(double constant) : constant_(constant) {}  // NOLINT(google-explicit-constructor)
  LinearExpr(Variable v) { terms_[v.id] = 1.0; }        // NOLINT(google-explicit-constructor)

  const std::map<std::uint32_t, double>& terms() const { return terms_; }
  double constant() const { return constant_; }
  bool is_constant() const { return terms_.empty(); }

  void add_term(Variable v, double coef);
  LinearExpr& operator+=(const LinearExpr& o);
  LinearExpr& operator-=(const LinearExpr& o);
  LinearExpr& operator*=(double k);

  friend LinearExpr operator+(LinearExpr a, const LinearExpr& b) { return a += b; }
  friend LinearExpr operator-(LinearExpr a, const LinearExpr& b) { return a -= b; }
  friend LinearExpr operator*(LinearExpr a, double k) { return a *= k; }
  friend LinearExpr operator*(double k, LinearExpr a) { return a *= k; }
  friend LinearExpr operator-(LinearExpr a) { return a *= -1.0; }
  friend bool operator==(const LinearExpr&, const LinearExpr&) = default;

 private:
  std::map<std::uint32_t, double> terms_;
  double constant_ = 0.0;
};

enum class Relation { kEq, kLe, kGe };
enum class Strength { kRequired, kWeak };

// `lhs relation 0`.
struct Constraint {
  LinearExpr lhs;
  Relation relation = Relation::kEq;
  Strength strength = Strength::kRequired;
};

// Convenience builders: (a rel b) becomes (a - b rel 0).
Constraint make_constraint(const LinearExpr& a, Relation rel, const LinearExpr& b,
                           Strength strength = Strength::kRequired);

struct ConstraintHandle {
  std::size_t index = 0;
};

class Solution {
 public:
  Solution() = default;
  Solution(std::vector<double> values, double objective)
      : values_(std::move(values)), objective_(objective) {}

  double value(Variable v) const;
  const std::vector<double>& values() const { return values_; }
  // Sum of absolute Weak violations, stay constraints included.
  double objective() const { return objective_; }

 private:
  std::vector<double> values_;
  double objective_ = 0.0;
};

// Incremental-use linear constraint solver with Required and Weak strengths.
// Every variable carries an implicit Weak stay `v == last solved value`
// (initially 0). solve() re-solves from scratch with a two-phase simplex
// using Bland's rule; independent groups of variables are solved separately.
class Solver {
 public:
  Variable add_variable(std::string label);
  ConstraintHandle add_constraint(Constraint c);

  // Throws Infeasible; on failure the previous assignment is kept.
  const Solution& solve();

  // Current assignment: last solved value, or 0 before any solve.
  double value(Variable v) const;
  const std::string& label(Variable v) const;

  std::size_t num_variables() const { return labels_.size(); }
  std::size_t num_constraints() const { return constraints_.size(); }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const Solution& last_solution() const { return solution_; }
  // True if constraints were added after the last successful solve.
  bool dirty() const { return dirty_; }

 private:
  void check_known(Variable v) const;

  std::vector<std::string> labels_;
  std::vector<double> stays_;
  std::vector<Constraint> constraints_;
  Solution solution_;
  bool dirty_ = false;
};

// Residual of `c` at `values` (0 when satisfied, otherwise the violation).
double violation(const Constraint& c, const std::vector<double>& values);

}  // namespace roboscript::solver
