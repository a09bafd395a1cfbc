#pragma once

// Execution-based accuracy: a prediction is correct when it behaves like the
// reference program on every seeded evaluation scene.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "roboscript/baselines.hpp"
#include "roboscript/interp.hpp"
#include "roboscript/nmt.hpp"
#include "roboscript/sample.hpp"

namespace roboscript::eval {

inline constexpr double kPositionTolerance = 0.1 * scene::kTableWidth;
inline constexpr double kRotationTolerance = 18.0;  // degrees
inline constexpr std::size_t kDefaultScenes = 20;

enum class Verdict { kCorrect, kIncorrect, kMalformed, kFaulted };

std::string_view verdict_name(Verdict v);

// Same class set and every |dx|, |dy| strictly below the tolerance.
bool compare_placement(const interp::Placement& pred, const interp::Placement& ref);
// Same length and event kinds, equal grip payloads, and every Move within
// tolerance on x, y, z and r.
bool compare_trajectory(const interp::Trajectory& pred, const interp::Trajectory& ref);
// Outcomes of different kinds never match; two faults match when their kinds agree.
bool compare_outcome(const interp::ExecOutcome& pred, const interp::ExecOutcome& ref);

// What a system produces for one sample: either a malformed diagnosis or a
// function mapping a scene to an outcome.
struct Prediction {
  std::optional<std::string> malformed;
  std::function<interp::ExecOutcome(const scene::Scene&)> run;
};

// Must be safe to call concurrently.
using Predictor = std::function<Prediction(const ParallelSample&)>;

Predictor ground_truth_predictor();
// Translate, then parse; a lex/parse failure or a missing EOS is malformed.
Predictor translator_predictor(const nmt::Model& model);
Predictor baseline_predictor(const baselines::Baseline& model);

struct SampleResult {
  std::string id;
  std::string family;
  Verdict verdict = Verdict::kIncorrect;
  std::size_t scenes_passed = 0;
  std::string detail;  // malformed diagnosis or first failing scene
};

struct FamilyStats {
  std::string family;
  int clauses = 0;
  std::size_t samples = 0;
  std::size_t correct = 0;
  std::size_t malformed = 0;
  std::size_t faulted = 0;
  double accuracy() const;
};

struct Report {
  std::string model;
  dsl::Task task = dsl::Task::kArrange;
  std::uint64_t seed = 0;
  std::size_t n_scenes = kDefaultScenes;
  std::vector<SampleResult> samples;  // in input order

  std::size_t count(Verdict v) const;
  double accuracy() const;  // percent
  double malformed_rate() const;
  double faulted_rate() const;
  std::vector<FamilyStats> families() const;  // sorted by clause count, then name
};

struct EvalOptions {
  std::size_t n_scenes = kDefaultScenes;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0: hardware concurrency
};

// Samples of other tasks are ignored.
Report evaluate(const Predictor& predictor, const std::vector<ParallelSample>& samples, dsl::Task task,
                std::string model_name, const EvalOptions& options);

// Human-readable table followed by `record`, `family` and `sample` lines.
void write_report(std::ostream& out, const Report& report);
// Table of accuracy / malformed / faulted per report.
void write_comparison(std::ostream& out, const std::vector<Report>& reports);

}  // namespace roboscript::eval
