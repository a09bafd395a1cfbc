#pragma once
// Independent reference optimizers for the constraint solver. Neither path
// shares code with the simplex implementation.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "roboscript/rng.hpp"
#include "roboscript/solver.hpp"

namespace oracle {

using roboscript::solver::Constraint;
using roboscript::solver::Relation;
using roboscript::solver::Strength;

struct System {
  int num_vars = 0;
  std::vector<Constraint> constraints;
};

inline double lhs_at(const Constraint& c, const std::vector<double>& x) {
  double v = c.lhs.constant();
  for (const auto& [id, coef] : c.lhs.terms()) v += coef * x[id];
  return v;
}

inline double residual(const Constraint& c, const std::vector<double>& x) {
  const double v = lhs_at(c, x);
  switch (c.relation) {
    case Relation::kEq:
      return std::abs(v);
    case Relation::kLe:
      return std::max(0.0, v);
    case Relation::kGe:
      return std::max(0.0, -v);
  }
  return 0.0;
}

// Sum of |x_j| (stays at zero) plus weak residuals.
inline double objective(const System& s, const std::vector<double>& x) {
  double f = 0.0;
  for (double v : x) f += std::abs(v);
  for (const auto& c : s.constraints) {
    if (c.strength == Strength::kWeak) f += residual(c, x);
  }
  return f;
}

inline bool feasible(const System& s, const std::vector<double>& x, double tol) {
  for (const auto& c : s.constraints) {
    if (c.strength == Strength::kRequired && residual(c, x) > tol) return false;
  }
  return true;
}

// Solves the dense n x n system in place; false if (near) singular.
inline bool solve_dense(std::vector<std::vector<double>> a, std::vector<double> b, std::vector<double>& x) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (std::abs(a[piv][col]) < 1e-10) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return true;
}

// Exact minimum by enumerating vertices of the hyperplane arrangement formed
// by every constraint boundary and every stay breakpoint x_j = 0. The stays
// make the arrangement pointed, so the convex piecewise-linear objective
// attains its minimum at one of these vertices.
inline double vertex_enumeration(const System& s, std::vector<double>* argmin = nullptr) {
  const int n = s.num_vars;
  std::vector<std::vector<double>> planes;  // coefficients..., rhs
  for (int j = 0; j < n; ++j) {
    std::vector<double> p(static_cast<std::size_t>(n) + 1, 0.0);
    p[static_cast<std::size_t>(j)] = 1.0;
    planes.push_back(p);
  }
  for (const auto& c : s.constraints) {
    std::vector<double> p(static_cast<std::size_t>(n) + 1, 0.0);
    for (const auto& [id, coef] : c.lhs.terms()) p[id] = coef;
    p[static_cast<std::size_t>(n)] = -c.lhs.constant();
    planes.push_back(p);
  }
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(static_cast<std::size_t>(n));
  const int total = static_cast<int>(planes.size());
  // Iterate over all n-subsets.
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (;;) {
    std::vector<std::vector<double>> a;
    std::vector<double> b;
    for (int i : idx) {
      const auto& p = planes[static_cast<std::size_t>(i)];
      a.emplace_back(p.begin(), p.end() - 1);
      b.push_back(p.back());
    }
    std::vector<double> x;
    if (solve_dense(a, b, x) && feasible(s, x, 1e-9)) {
      const double f = objective(s, x);
      if (f < best) {
        best = f;
        if (argmin) *argmin = x;
      }
    }
    int k = n - 1;
    while (k >= 0 && idx[static_cast<std::size_t>(k)] == total - n + k) --k;
    if (k < 0) break;
    ++idx[static_cast<std::size_t>(k)];
    for (int i = k + 1; i < n; ++i) idx[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i - 1)] + 1;
  }
  return best;
}

// Dense grid search at the given resolution over [-1, 1]^n (n <= 2).
inline double grid_search(const System& s, double resolution = 1e-3) {
  const int steps = static_cast<int>(std::lround(2.0 / resolution));
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> x(static_cast<std::size_t>(s.num_vars), 0.0);
  auto coord = [&](int i) { return -1.0 + i * resolution; };
  if (s.num_vars == 1) {
    for (int i = 0; i <= steps; ++i) {
      x[0] = coord(i);
      if (feasible(s, x, 1e-9)) best = std::min(best, objective(s, x));
    }
  } else {
    for (int i = 0; i <= steps; ++i) {
      x[0] = coord(i);
      for (int j = 0; j <= steps; ++j) {
        x[1] = coord(j);
        if (feasible(s, x, 1e-9)) best = std::min(best, objective(s, x));
      }
    }
  }
  return best;
}

inline Constraint make(std::vector<double> coefs, double constant, Relation rel, Strength st) {
  roboscript::solver::LinearExpr e(constant);
  for (std::size_t j = 0; j < coefs.size(); ++j) {
    e.add_term(roboscript::solver::Variable{static_cast<std::uint32_t>(j)}, coefs[j]);
  }
  return Constraint{e, rel, st};
}

// Random feasible system with real coefficients: 1..4 vars, 1..6 constraints,
// every Required constraint satisfied by a hidden anchor point.
inline System random_system(roboscript::Rng& rng) {
  System s;
  s.num_vars = 1 + static_cast<int>(rng.below(4));
  const int m = 1 + static_cast<int>(rng.below(6));
  std::vector<double> anchor(static_cast<std::size_t>(s.num_vars));
  for (auto& a : anchor) a = rng.uniform(-0.8, 0.8);
  for (int k = 0; k < m; ++k) {
    std::vector<double> coefs(static_cast<std::size_t>(s.num_vars), 0.0);
    bool any = false;
    for (auto& c : coefs) {
      if (rng.coin(0.7)) {
        c = rng.uniform(-1.0, 1.0);
        any = true;
      }
    }
    if (!any) coefs[rng.below(coefs.size())] = rng.uniform(0.2, 1.0);
    double at_anchor = 0.0;
    for (std::size_t j = 0; j < coefs.size(); ++j) at_anchor += coefs[j] * anchor[j];
    const auto rel = static_cast<Relation>(rng.below(3));
    const auto st = rng.coin(0.5) ? Strength::kRequired : Strength::kWeak;
    double constant = -at_anchor;
    if (rel == Relation::kLe) constant -= rng.uniform(0.0, 0.3);
    if (rel == Relation::kGe) constant += rng.uniform(0.0, 0.3);
    if (st == Strength::kWeak) constant += rng.uniform(-0.3, 0.3);
    s.constraints.push_back(make(coefs, constant, rel, st));
  }
  return s;
}

// Grid-aligned system for the grid-search oracle: 1..2 vars, coefficients in
// {-1, 0, 1}, constants on a 0.002 lattice with |c| <= 0.5, so every vertex
// of the arrangement lies on the 1e-3 grid inside [-1, 1]^2.
inline System random_grid_system(roboscript::Rng& rng) {
  System s;
  s.num_vars = 1 + static_cast<int>(rng.below(2));
  const int m = 1 + static_cast<int>(rng.below(6));
  std::vector<double> anchor(static_cast<std::size_t>(s.num_vars));
  for (auto& a : anchor) a = -0.25 + 0.002 * static_cast<double>(rng.below(251));
  for (int k = 0; k < m; ++k) {
    std::vector<double> coefs(static_cast<std::size_t>(s.num_vars), 0.0);
    for (auto& c : coefs) c = static_cast<double>(static_cast<int>(rng.below(3)) - 1);
    if (std::all_of(coefs.begin(), coefs.end(), [](double c) { return c == 0.0; })) coefs[0] = 1.0;
    double at_anchor = 0.0;
    for (std::size_t j = 0; j < coefs.size(); ++j) at_anchor += coefs[j] * anchor[j];
    const auto rel = static_cast<Relation>(rng.below(3));
    const auto st = rng.coin(0.5) ? Strength::kRequired : Strength::kWeak;
    double constant = -at_anchor;
    if (rel == Relation::kLe) constant -= 0.002 * static_cast<double>(rng.below(50));
    if (rel == Relation::kGe) constant += 0.002 * static_cast<double>(rng.below(50));
    if (st == Strength::kWeak) constant += 0.002 * (static_cast<double>(rng.below(101)) - 50.0);
    constant = std::round(constant * 500.0) / 500.0;
    s.constraints.push_back(make(coefs, constant, rel, st));
  }
  return s;
}

}  // namespace oracle
