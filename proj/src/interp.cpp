#include "roboscript/interp.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <optional>

#include <fmt/format.h>

#include "roboscript/rng.hpp"
#include "roboscript/solver.hpp"

namespace roboscript::interp {

namespace {

using dsl::Attribute;
using dsl::BinaryOp;
using dsl::Builtin;
using dsl::CompareOp;
using dsl::Expr;
using dsl::ExprKind;
using dsl::Stmt;
using dsl::StmtKind;
using solver::LinearExpr;

constexpr double kDegrees = 180.0 / std::numbers::pi;

struct Fault {
  FaultKind kind;
  std::string detail;
};

class Machine {
 public:
  Machine(const dsl::Program& program, const scene::Scene& scene) : program_(program), scene_(scene) {
    if (program.task == dsl::Task::kArrange) {
      for (auto c : scene::kAllClasses) {
        px_[scene::class_index(c)] = solver_.add_variable("px_" + std::string(scene::class_name(c)));
        py_[scene::class_index(c)] = solver_.add_variable("py_" + std::string(scene::class_name(c)));
      }
    }
  }

  ExecOutcome run() {
    try {
      block(program_.body);
      if (program_.task == dsl::Task::kManipulation) return trajectory_;
      if (solver_.dirty() || !solved_) solve();
      Placement placement;
      for (auto c : program_.referenced_classes) {
        object(c);
        placement.positions[c] = Point{solver_.value(px_[scene::class_index(c)]),
                                       solver_.value(py_[scene::class_index(c)])};
      }
      return placement;
    } catch (const Fault& f) {
      return RuntimeFault{f.kind, steps_, f.detail};
    }
  }

 private:
  [[noreturn]] static void fault(FaultKind k, std::string detail) { throw Fault{k, std::move(detail)}; }

  const scene::SceneObject& object(scene::ObjectClass c) const {
    const auto* o = scene_.lookup(c);
    if (!o) fault(FaultKind::kNullObject, std::string(scene::class_name(c)) + " is None");
    return *o;
  }

  void solve() {
    try {
      solver_.solve();
      solved_ = true;
    } catch (const solver::Infeasible& e) {
      fault(FaultKind::kInfeasibleConstraints, e.what());
    }
  }

  static double finite(double v, const char* what) {
    if (!std::isfinite(v)) fault(FaultKind::kDomainError, std::string("non-finite result in ") + what);
    return v;
  }

  double constant(const LinearExpr& e, const char* what) const {
    if (!e.is_constant()) fault(FaultKind::kDomainError, std::string(what) + " needs a constant operand");
    return e.constant();
  }

  LinearExpr eval(const Expr& e) {
    switch (e.kind) {
      case ExprKind::kNumber:
        return LinearExpr(e.number);
      case ExprKind::kLocal: {
        const auto& slot = locals_[static_cast<std::size_t>(e.local)];
        if (!slot) fault(FaultKind::kDomainError, "t" + std::to_string(e.local) + " read before assignment");
        return *slot;
      }
      case ExprKind::kAttribute: {
        const auto& o = object(e.cls);
        switch (e.attribute) {
          case Attribute::kX:
            return LinearExpr(o.x);
          case Attribute::kY:
            return LinearExpr(o.y);
          case Attribute::kW:
            return LinearExpr(o.w);
          case Attribute::kH:
            return LinearExpr(o.h);
          case Attribute::kD:
            return LinearExpr(o.d);
        }
        break;
      }
      case ExprKind::kPlacement:
        object(e.cls);
        return LinearExpr(e.placement_x ? px_[scene::class_index(e.cls)] : py_[scene::class_index(e.cls)]);
      case ExprKind::kNegate:
        return -eval(e.args[0]);
      case ExprKind::kBinary: {
        LinearExpr a = eval(e.args[0]);
        LinearExpr b = eval(e.args[1]);
        switch (e.op) {
          case BinaryOp::kAdd:
            return check(a + b);
          case BinaryOp::kSub:
            return check(a - b);
          case BinaryOp::kMul:
            if (a.is_constant()) return check(b * a.constant());
            if (b.is_constant()) return check(a * b.constant());
            fault(FaultKind::kDomainError, "product of two solver expressions is not linear");
          case BinaryOp::kDiv: {
            const double d = constant(b, "division");
            if (d == 0.0) fault(FaultKind::kDivByZero, "division by zero");
            return check(a * (1.0 / d));
          }
        }
        break;
      }
      case ExprKind::kCall:
        return call(e);
    }
    fault(FaultKind::kDomainError, "malformed expression");
  }

  static LinearExpr check(LinearExpr e) {
    finite(e.constant(), "arithmetic");
    for (const auto& [id, c] : e.terms()) finite(c, "arithmetic");
    return e;
  }

  LinearExpr call(const Expr& e) {
    if (e.builtin == Builtin::kValue) {
      const LinearExpr arg = eval(e.args[0]);
      double v = arg.constant();
      for (const auto& [id, c] : arg.terms()) v += c * solver_.value(solver::Variable{id});
      return LinearExpr(v);
    }
    const double a = constant(eval(e.args[0]), "builtin");
    double b = 0.0;
    if (e.args.size() > 1) b = constant(eval(e.args[1]), "builtin");
    double r = 0.0;
    switch (e.builtin) {
      case Builtin::kSin:
        r = std::sin(a / kDegrees);
        break;
      case Builtin::kCos:
        r = std::cos(a / kDegrees);
        break;
      case Builtin::kAtan2:
        r = (a == 0.0 && b == 0.0) ? 0.0 : std::atan2(a, b) * kDegrees;
        break;
      case Builtin::kHypot:
        r = std::hypot(a, b);
        break;
      case Builtin::kAbs:
        r = std::abs(a);
        break;
      case Builtin::kMin:
        r = std::min(a, b);
        break;
      case Builtin::kMax:
        r = std::max(a, b);
        break;
      case Builtin::kValue:
        break;
    }
    return LinearExpr(finite(r, "builtin"));
  }

  bool compare(CompareOp op, double a, double b) const {
    switch (op) {
      case CompareOp::kEq:
        return a == b;
      case CompareOp::kLe:
        return a <= b;
      case CompareOp::kGe:
        return a >= b;
      case CompareOp::kLt:
        return a < b;
      case CompareOp::kGt:
        return a > b;
    }
    return false;
  }

  void block(const std::vector<Stmt>& stmts) {
    for (const auto& s : stmts) statement(s);
  }

  void statement(const Stmt& s) {
    if (++steps_ > kStepBudget) {
      steps_ = kStepBudget;
      fault(FaultKind::kStepBudgetExceeded, "more than 10000 statements executed");
    }
    switch (s.kind) {
      case StmtKind::kLet:
        locals_[static_cast<std::size_t>(s.local)] = eval(s.exprs[0]);
        return;
      case StmtKind::kRequire: {
        const LinearExpr lhs = eval(s.exprs[0]) - eval(s.exprs[1]);
        solver::Relation rel = solver::Relation::kEq;
        if (s.compare == CompareOp::kLe) rel = solver::Relation::kLe;
        if (s.compare == CompareOp::kGe) rel = solver::Relation::kGe;
        solver_.add_constraint(solver::Constraint{lhs, rel, solver::Strength::kRequired});
        return;
      }
      case StmtKind::kSolve:
        solve();
        return;
      case StmtKind::kMove: {
        Move m;
        m.x = constant(eval(s.exprs[0]), "move");
        m.y = constant(eval(s.exprs[1]), "move");
        m.z = constant(eval(s.exprs[2]), "move");
        m.r = constant(eval(s.exprs[3]), "move");
        if (std::abs(m.x) > kMaxReach || std::abs(m.y) > kMaxReach) {
          fault(FaultKind::kDomainError, "move target outside reach");
        }
        trajectory_.events.emplace_back(m);
        return;
      }
      case StmtKind::kGrip: {
        if (!trajectory_.events.empty()) {
          if (const auto* g = std::get_if<Grip>(&trajectory_.events.back()); g && g->engaged == s.grip_on) return;
        }
        trajectory_.events.emplace_back(Grip{s.grip_on});
        return;
      }
      case StmtKind::kIf: {
        const double a = constant(eval(s.exprs[0]), "comparison");
        const double b = constant(eval(s.exprs[1]), "comparison");
        block(compare(s.compare, a, b) ? s.body : s.else_body);
        return;
      }
      case StmtKind::kFor:
        for (int i = 0; i < s.count; ++i) block(s.body);
        return;
    }
  }

  const dsl::Program& program_;
  const scene::Scene& scene_;
  solver::Solver solver_;
  std::array<solver::Variable, scene::kNumClasses> px_{};
  std::array<solver::Variable, scene::kNumClasses> py_{};
  std::array<std::optional<LinearExpr>, 10> locals_{};
  Trajectory trajectory_;
  std::size_t steps_ = 0;
  bool solved_ = false;
};

}  // namespace

std::string_view fault_name(FaultKind k) {
  switch (k) {
    case FaultKind::kNullObject:
      return "NullObject";
    case FaultKind::kDivByZero:
      return "DivByZero";
    case FaultKind::kStepBudgetExceeded:
      return "StepBudgetExceeded";
    case FaultKind::kInfeasibleConstraints:
      return "InfeasibleConstraints";
    case FaultKind::kDomainError:
      return "DomainError";
  }
  return "Unknown";
}

ExecOutcome execute(const dsl::Program& program, const scene::Scene& scene) {
  return Machine(program, scene).run();
}

std::vector<scene::ObjectClass> rollout_classes(const dsl::Program& program) { return program.referenced_classes; }

std::uint64_t rollout_seed(std::uint64_t seed, std::string_view sample_id, std::size_t k) {
  return derive_seed({seed, hash_string(sample_id), static_cast<std::uint64_t>(k)});
}

std::vector<scene::Scene> rollout_scenes(const ParallelSample& sample, std::size_t n_scenes, std::uint64_t seed) {
  std::vector<scene::Scene> out;
  if (n_scenes == 0) return out;
  std::vector<dsl::Token> tokens = sample.program;
  tokens.push_back(dsl::kEos);
  const auto classes = dsl::referenced_classes(tokens);
  out.reserve(n_scenes);
  for (std::size_t k = 0; k < n_scenes; ++k) {
    out.push_back(scene::generate_scene(classes, rollout_seed(seed, sample.id, k)));
  }
  return out;
}

std::vector<std::pair<scene::Scene, ExecOutcome>> execute_ground_truth_batch(const ParallelSample& sample,
                                                                             std::size_t n_scenes,
                                                                             std::uint64_t seed) {
  std::vector<std::pair<scene::Scene, ExecOutcome>> out;
  if (n_scenes == 0) return out;
  const dsl::Program program = parse_program(sample);
  for (auto& s : rollout_scenes(sample, n_scenes, seed)) {
    ExecOutcome outcome = execute(program, s);
    out.emplace_back(std::move(s), std::move(outcome));
  }
  return out;
}

std::string format_number(double v) {
  std::string s = fmt::format("{:.6f}", v);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

std::string format_outcome(const ExecOutcome& outcome) {
  std::string out;
  if (const auto* p = std::get_if<Placement>(&outcome)) {
    for (const auto& [cls, pt] : p->positions) {
      out += fmt::format("PLACE {} {} {}\n", scene::class_name(cls), format_number(pt.x), format_number(pt.y));
    }
  } else if (const auto* t = std::get_if<Trajectory>(&outcome)) {
    for (const auto& ev : t->events) {
      if (const auto* m = std::get_if<Move>(&ev)) {
        out += fmt::format("MOVE {} {} {} {}\n", format_number(m->x), format_number(m->y), format_number(m->z),
                           format_number(m->r));
      } else {
        out += std::get<Grip>(ev).engaged ? "GRIP ON\n" : "GRIP OFF\n";
      }
    }
  } else {
    const auto& f = std::get<RuntimeFault>(outcome);
    out += fmt::format("FAULT {} {}\n", fault_name(f.kind), f.step);
  }
  return out;
}

}  // namespace roboscript::interp
