#include "roboscript/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace roboscript::solver {

void LinearExpr::add_term(Variable v, double coef) {
  if (coef == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(v.id, coef);
  if (!inserted) {
    it->second += coef;
    if (it->second == 0.0) terms_.erase(it);
  }
}

LinearExpr& LinearExpr::operator+=(const LinearExpr& o) {
  for (const auto& [id, c] : o.terms_) add_term(Variable{id}, c);
  constant_ += o.constant_;
  return *this;
}

LinearExpr& LinearExpr::operator-=(const LinearExpr& o) {
  for (const auto& [id, c] : o.terms_) add_term(Variable{id}, -c);
  constant_ -= o.constant_;
  return *this;
}

LinearExpr& LinearExpr::operator*=(double k) {
  if (k == 0.0) {
    terms_.clear();
  } else {
    for (auto& [id, c] : terms_) c *= k;
  }
  constant_ *= k;
  return *this;
}

Constraint make_constraint(const LinearExpr& a, Relation rel, const LinearExpr& b, Strength strength) {
  return Constraint{a - b, rel, strength};
}

double Solution::value(Variable v) const {
  if (v.id >= values_.size()) throw UnknownVariable("variable " + std::to_string(v.id));
  return values_[v.id];
}

double violation(const Constraint& c, const std::vector<double>& values) {
  double lhs = c.lhs.constant();
  for (const auto& [id, coef] : c.lhs.terms()) lhs += coef * values.at(id);
  switch (c.relation) {
    case Relation::kEq:
      return std::abs(lhs);
    case Relation::kLe:
      return std::max(0.0, lhs);
    case Relation::kGe:
      return std::max(0.0, -lhs);
  }
  return 0.0;
}

namespace {

constexpr double kPivotEps = 1e-11;
constexpr double kCostEps = 1e-10;

// Dense tableau LP: minimize cost.x subject to A x = b, x >= 0, b >= 0.
// Row 0..m-1 are constraints; the last column is the right-hand side.
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * (cols + 1), 0.0), basis_(rows, 0) {}

  double& at(std::size_t r, std::size_t c) { return data_[r * (cols_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * (cols_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols_); }
  double rhs(std::size_t r) const { return at(r, cols_); }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t pr, std::size_t pc) {
    const std::size_t width = cols_ + 1;
    double* prow = &data_[pr * width];
    const double inv = 1.0 / prow[pc];
    for (std::size_t c = 0; c < width; ++c) prow[c] *= inv;
    prow[pc] = 1.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      if (r == pr) continue;
      double* row = &data_[r * width];
      const double f = row[pc];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < width; ++c) row[c] -= f * prow[c];
      row[pc] = 0.0;
    }
    basis_[pr] = pc;
  }

  // Runs primal simplex with Bland's rule for `cost`. Columns with
  // allowed[c] == false never enter. Returns false if unbounded.
  bool optimize(const std::vector<double>& cost, const std::vector<bool>& allowed) {
    const std::size_t max_iters = 50 * (rows_ + cols_) + 1000;
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
      std::size_t entering = cols_;
      for (std::size_t c = 0; c < cols_; ++c) {
        if (!allowed[c]) continue;
        double reduced = cost[c];
        for (std::size_t r = 0; r < rows_; ++r) reduced -= cost[basis_[r]] * at(r, c);
        if (reduced < -kCostEps) {
          entering = c;
          break;
        }
      }
      if (entering == cols_) return true;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows_; ++r) {
        const double a = at(r, entering);
        if (a > kPivotEps) best = std::min(best, std::max(rhs(r), 0.0) / a);
      }
      std::size_t leaving = rows_;
      for (std::size_t r = 0; r < rows_; ++r) {
        const double a = at(r, entering);
        if (a <= kPivotEps || std::max(rhs(r), 0.0) / a > best + 1e-12) continue;
        if (leaving == rows_ || basis_[r] < basis_[leaving]) leaving = r;
      }
      if (leaving == rows_) return false;
      pivot(leaving, entering);
    }
    throw Error("SolverIterationLimit", "simplex iteration limit reached");
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
  std::vector<std::size_t> basis_;
};

struct Component {
  std::vector<std::uint32_t> vars;
  std::vector<std::size_t> constraints;
};

std::vector<Component> components(std::size_t num_vars, const std::vector<Constraint>& constraints) {
  std::vector<std::uint32_t> parent(num_vars);
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& c : constraints) {
    if (c.lhs.terms().empty()) continue;
    const std::uint32_t first = find(c.lhs.terms().begin()->first);
    for (const auto& [id, coef] : c.lhs.terms()) {
      const std::uint32_t r = find(id);
      if (r != first) parent[std::max(r, first)] = std::min(r, first);
    }
  }
  std::vector<int> slot(num_vars, -1);
  std::vector<Component> out;
  std::vector<bool> used(num_vars, false);
  for (const auto& c : constraints) {
    for (const auto& [id, coef] : c.lhs.terms()) used[id] = true;
  }
  for (std::uint32_t v = 0; v < num_vars; ++v) {
    if (!used[v]) continue;
    const std::uint32_t r = find(v);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(out.size());
      out.emplace_back();
    }
    out[static_cast<std::size_t>(slot[r])].vars.push_back(v);
  }
  for (std::size_t k = 0; k < constraints.size(); ++k) {
    const auto& terms = constraints[k].lhs.terms();
    if (terms.empty()) continue;
    out[static_cast<std::size_t>(slot[find(terms.begin()->first)])].constraints.push_back(k);
  }
  return out;
}

// Solves one connected component in place of `values` (holding the stays).
void solve_component(const Component& comp, const std::vector<Constraint>& constraints,
                     std::vector<double>& values, std::vector<std::size_t>& local) {
  const std::size_t n = comp.vars.size();
  for (std::size_t j = 0; j < n; ++j) local[comp.vars[j]] = j;

  // Column layout: [p_0, n_0, ..., p_{n-1}, n_{n-1}, extra columns..., artificials...]
  std::size_t extra = 0;
  for (std::size_t k : comp.constraints) {
    const auto& c = constraints[k];
    if (c.strength == Strength::kRequired) {
      extra += c.relation == Relation::kEq ? 0 : 1;
    } else {
      extra += 2;
    }
  }
  const std::size_t m = comp.constraints.size();
  const std::size_t structural = 2 * n + extra;
  Tableau t(m, structural + m);
  std::vector<double> cost(structural + m, 0.0);
  for (std::size_t j = 0; j < 2 * n; ++j) cost[j] = 1.0;

  std::size_t next = 2 * n;
  for (std::size_t r = 0; r < m; ++r) {
    const auto& c = constraints[comp.constraints[r]];
    double rhs = -c.lhs.constant();
    for (const auto& [id, coef] : c.lhs.terms()) {
      const std::size_t j = local[id];
      t.at(r, 2 * j) += coef;
      t.at(r, 2 * j + 1) -= coef;
      rhs -= coef * values[id];
    }
    if (c.strength == Strength::kRequired) {
      if (c.relation == Relation::kLe) {
        t.at(r, next++) = 1.0;
      } else if (c.relation == Relation::kGe) {
        t.at(r, next++) = -1.0;
      }
    } else {
      switch (c.relation) {
        case Relation::kEq:  // lhs - e+ + e- = 0
          t.at(r, next) = -1.0;
          t.at(r, next + 1) = 1.0;
          cost[next] = cost[next + 1] = 1.0;
          break;
        case Relation::kLe:  // lhs - e + s = 0
          t.at(r, next) = -1.0;
          t.at(r, next + 1) = 1.0;
          cost[next] = 1.0;
          break;
        case Relation::kGe:  // lhs + e - s = 0
          t.at(r, next) = 1.0;
          t.at(r, next + 1) = -1.0;
          cost[next] = 1.0;
          break;
      }
      next += 2;
    }
    t.rhs(r) = rhs;
    if (rhs < 0.0) {
      for (std::size_t col = 0; col <= t.cols(); ++col) t.at(r, col) = -t.at(r, col);
    }
    t.at(r, structural + r) = 1.0;
    t.basis()[r] = structural + r;
  }

  // Phase 1: minimize the sum of artificials.
  std::vector<double> phase1(structural + m, 0.0);
  double scale = 1.0;
  for (std::size_t r = 0; r < m; ++r) {
    phase1[structural + r] = 1.0;
    scale = std::max(scale, std::abs(t.rhs(r)));
  }
  std::vector<bool> allowed(structural + m, true);
  t.optimize(phase1, allowed);
  double infeasibility = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    if (t.basis()[r] >= structural) infeasibility += t.rhs(r);
  }
  if (infeasibility > 1e-9 * scale) {
    throw Infeasible("required constraints are jointly unsatisfiable (residual " +
                     std::to_string(infeasibility) + ")");
  }
  // Drive remaining zero-valued artificials out of the basis where possible.
  for (std::size_t r = 0; r < m; ++r) {
    if (t.basis()[r] < structural) continue;
    for (std::size_t col = 0; col < structural; ++col) {
      if (std::abs(t.at(r, col)) > 1e-9) {
        t.pivot(r, col);
        break;
      }
    }
  }
  for (std::size_t col = structural; col < structural + m; ++col) allowed[col] = false;

  // Phase 2. Unbounded cannot happen: every structural column has nonnegative
  // cost or is paired with a costed column in its row.
  if (!t.optimize(cost, allowed)) throw Error("SolverUnbounded", "linear program is unbounded");

  std::vector<double> x(structural + m, 0.0);
  for (std::size_t r = 0; r < m; ++r) x[t.basis()[r]] = t.rhs(r);
  for (std::size_t j = 0; j < n; ++j) values[comp.vars[j]] += x[2 * j] - x[2 * j + 1];
}

}  // namespace

Variable Solver::add_variable(std::string label) {
  labels_.push_back(std::move(label));
  stays_.push_back(0.0);
  return Variable{static_cast<std::uint32_t>(labels_.size() - 1)};
}

void Solver::check_known(Variable v) const {
  if (v.id >= labels_.size()) throw UnknownVariable("variable id " + std::to_string(v.id) + " is not registered");
}

ConstraintHandle Solver::add_constraint(Constraint c) {
  for (const auto& [id, coef] : c.lhs.terms()) {
    check_known(Variable{id});
    if (!std::isfinite(coef)) throw PreconditionError("non-finite coefficient");
  }
  if (!std::isfinite(c.lhs.constant())) throw PreconditionError("non-finite constant");
  constraints_.push_back(std::move(c));
  dirty_ = true;
  return ConstraintHandle{constraints_.size() - 1};
}

const Solution& Solver::solve() {
  std::vector<double> values = stays_;
  // Variable-free required constraints are either trivially true or infeasible.
  for (const auto& c : constraints_) {
    if (c.lhs.is_constant() && c.strength == Strength::kRequired &&
        violation(c, values) > kFeasibilityTolerance) {
      throw Infeasible("constant required constraint is violated");
    }
  }
  std::vector<std::size_t> local(labels_.size(), 0);
  for (const auto& comp : components(labels_.size(), constraints_)) {
    solve_component(comp, constraints_, values, local);
  }
  double objective = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) objective += std::abs(values[i] - stays_[i]);
  for (const auto& c : constraints_) {
    if (c.strength == Strength::kWeak) objective += violation(c, values);
  }
  stays_ = values;
  solution_ = Solution(std::move(values), objective);
  dirty_ = false;
  return solution_;
}

double Solver::value(Variable v) const {
  check_known(v);
  return stays_[v.id];
}

const std::string& Solver::label(Variable v) const {
  check_known(v);
  return labels_[v.id];
}

}  // namespace roboscript::solver
