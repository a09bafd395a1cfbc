#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "roboscript/dsl.hpp"
#include "roboscript/sample.hpp"
#include "roboscript/scene.hpp"

namespace roboscript::interp {

inline constexpr std::size_t kStepBudget = 10000;
inline constexpr double kMaxReach = 1.5;

struct Move {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double r = 0.0;  // degrees
  friend bool operator==(const Move&, const Move&) = default;
};

struct Grip {
  bool engaged = false;
  friend bool operator==(const Grip&, const Grip&) = default;
};

using RobotEvent = std::variant<Move, Grip>;

struct Trajectory {
  std::vector<RobotEvent> events;
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

// Target table position per class, ordered by the class registry.
struct Placement {
  std::map<scene::ObjectClass, Point> positions;
  friend bool operator==(const Placement&, const Placement&) = default;
};

enum class FaultKind { kNullObject, kDivByZero, kStepBudgetExceeded, kInfeasibleConstraints, kDomainError };

std::string_view fault_name(FaultKind k);

struct RuntimeFault {
  FaultKind kind = FaultKind::kDomainError;
  std::size_t step = 0;
  std::string detail;
  friend bool operator==(const RuntimeFault&, const RuntimeFault&) = default;
};

using ExecOutcome = std::variant<Placement, Trajectory, RuntimeFault>;

inline bool is_fault(const ExecOutcome& o) { return std::holds_alternative<RuntimeFault>(o); }

// Runs `program` against `scene`. Deterministic and side-effect free: the
// only observable result is the returned outcome.
ExecOutcome execute(const dsl::Program& program, const scene::Scene& scene);

// Scene classes for a program's rollouts: its referenced classes.
std::vector<scene::ObjectClass> rollout_classes(const dsl::Program& program);
// The k-th randomized scene used to roll out `sample_id`.
std::uint64_t rollout_seed(std::uint64_t seed, std::string_view sample_id, std::size_t k);
std::vector<scene::Scene> rollout_scenes(const ParallelSample& sample, std::size_t n_scenes, std::uint64_t seed);

std::vector<std::pair<scene::Scene, ExecOutcome>> execute_ground_truth_batch(const ParallelSample& sample,
                                                                             std::size_t n_scenes,
                                                                             std::uint64_t seed);

// Event-per-line rendering: `MOVE x y z r`, `GRIP ON|OFF`, `PLACE class x y`,
// or a single `FAULT <kind> <step>` line. Numbers use six decimals.
std::string format_outcome(const ExecOutcome& outcome);
std::string format_number(double v);

}  // namespace roboscript::interp
