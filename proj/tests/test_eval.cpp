#include <doctest.h>

#include <sstream>

#include "roboscript/corpus.hpp"
#include "roboscript/eval.hpp"

using namespace roboscript;
using namespace roboscript::eval;
using interp::Grip;
using interp::Move;
using scene::ObjectClass;

namespace {

interp::Placement placement(double x, double y) {
  interp::Placement p;
  p.positions[ObjectClass::kApple] = {x, y};
  p.positions[ObjectClass::kCup] = {-0.5, 0.5};
  return p;
}

interp::Trajectory trajectory(double z, double r) {
  interp::Trajectory t;
  t.events = {Move{0.1, 0.2, z, r}, Grip{true}, Move{0.4, 0.4, 0.5, 0}};
  return t;
}

std::vector<ParallelSample> small_corpus(dsl::Task task) { return corpus::generate_corpus(task, 30, 5); }

// Replays a fixed outcome on every scene.
Predictor constant(interp::ExecOutcome outcome) {
  return [outcome](const ParallelSample&) {
    Prediction p;
    p.run = [outcome](const scene::Scene&) { return outcome; };
    return p;
  };
}

}  // namespace

TEST_CASE("placements match within a strict position tolerance") {
  const auto ref = placement(0.3, 0.3);
  CHECK(compare_placement(placement(0.49, 0.3), ref));
  CHECK(compare_placement(placement(0.3, 0.11), ref));
  CHECK_FALSE(compare_placement(placement(0.55, 0.3), ref));
  CHECK_FALSE(compare_placement(placement(0.3, 0.3 - 0.25), ref));
  CHECK_FALSE(compare_placement(placement(0.5, 0.3), ref));

  auto missing = ref;
  missing.positions.erase(ObjectClass::kCup);
  CHECK_FALSE(compare_placement(missing, ref));
  CHECK_FALSE(compare_placement(ref, missing));
}

TEST_CASE("trajectories match event by event") {
  const auto ref = trajectory(0.2, 0);
  CHECK(compare_trajectory(trajectory(0.39, 17), ref));
  CHECK_FALSE(compare_trajectory(trajectory(0.5, 0), ref));
  CHECK_FALSE(compare_trajectory(trajectory(0.2, 19), ref));

  auto extra = ref;
  extra.events.emplace_back(Move{0.4, 0.4, 0.5, 0});
  CHECK_FALSE(compare_trajectory(extra, ref));

  auto released = ref;
  released.events[1] = Grip{false};
  CHECK_FALSE(compare_trajectory(released, ref));

  auto swapped = ref;
  std::swap(swapped.events[0], swapped.events[1]);
  CHECK_FALSE(compare_trajectory(swapped, ref));
}

TEST_CASE("faults only match faults of the same kind") {
  const interp::ExecOutcome null_fault = interp::RuntimeFault{interp::FaultKind::kNullObject, 0, "x"};
  const interp::ExecOutcome div_fault = interp::RuntimeFault{interp::FaultKind::kDivByZero, 0, "y"};
  CHECK(compare_outcome(null_fault, interp::RuntimeFault{interp::FaultKind::kNullObject, 0, "other text"}));
  CHECK_FALSE(compare_outcome(null_fault, div_fault));
  CHECK_FALSE(compare_outcome(null_fault, placement(0, 0)));
  CHECK_FALSE(compare_outcome(placement(0, 0), trajectory(0, 0)));
  CHECK(compare_outcome(trajectory(0, 0), trajectory(0, 0)));
}

TEST_CASE("ground-truth programs are fully consistent with themselves") {
  for (auto task : {dsl::Task::kArrange, dsl::Task::kManipulation}) {
    const auto samples = corpus::augment(small_corpus(task), 2, 7);
    const auto r = evaluate(ground_truth_predictor(), samples, task, "ground-truth", {});
    CHECK(r.samples.size() == samples.size());
    CHECK(r.accuracy() == 100.0);
    CHECK(r.malformed_rate() == 0.0);
    CHECK(r.faulted_rate() == 0.0);
    for (const auto& s : r.samples) CHECK(s.scenes_passed == kDefaultScenes);
  }
}

TEST_CASE("verdicts distinguish malformed, faulted and incorrect") {
  const auto samples = small_corpus(dsl::Task::kManipulation);
  const Predictor malformed = [](const ParallelSample&) {
    Prediction p;
    p.malformed = "unparsable";
    return p;
  };
  const auto m = evaluate(malformed, samples, dsl::Task::kManipulation, "m", {});
  CHECK(m.malformed_rate() == 100.0);
  CHECK(m.samples[0].detail == "unparsable");

  const auto f = evaluate(constant(interp::RuntimeFault{interp::FaultKind::kDivByZero, 0, "d"}), samples,
                          dsl::Task::kManipulation, "f", {});
  CHECK(f.faulted_rate() == 100.0);
  CHECK(f.accuracy() == 0.0);

  const auto i = evaluate(constant(trajectory(5, 0)), samples, dsl::Task::kManipulation, "i", {});
  CHECK(i.count(Verdict::kIncorrect) == samples.size());
  CHECK(i.samples[0].scenes_passed == 0);
}

TEST_CASE("samples of other tasks are ignored") {
  auto samples = small_corpus(dsl::Task::kArrange);
  const auto manip = small_corpus(dsl::Task::kManipulation);
  samples.insert(samples.end(), manip.begin(), manip.end());
  const auto r = evaluate(ground_truth_predictor(), samples, dsl::Task::kManipulation, "gt", {});
  CHECK(r.samples.size() == manip.size());
  EvalOptions none;
  none.n_scenes = 0;
  CHECK_THROWS_AS(evaluate(ground_truth_predictor(), samples, dsl::Task::kArrange, "gt", none), PreconditionError);
}

TEST_CASE("evaluation is deterministic across thread counts") {
  const auto samples = small_corpus(dsl::Task::kArrange);
  const auto model = baselines::init_baseline({}, dsl::Task::kArrange, corpus::english_vocabulary());
  EvalOptions one;
  one.threads = 1;
  one.seed = 3;
  EvalOptions four = one;
  four.threads = 4;
  const auto a = evaluate(baseline_predictor(model), samples, dsl::Task::kArrange, "b", one);
  const auto b = evaluate(baseline_predictor(model), samples, dsl::Task::kArrange, "b", four);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    CHECK(a.samples[k].id == b.samples[k].id);
    CHECK(a.samples[k].verdict == b.samples[k].verdict);
    CHECK(a.samples[k].scenes_passed == b.samples[k].scenes_passed);
  }
  CHECK(a.malformed_rate() == 0.0);
}

TEST_CASE("an untrained translator is scored without throwing") {
  nmt::ModelConfig c;
  c.embed_dim = 4;
  c.hidden_dim = 6;
  c.head_dim = 6;
  c.max_decode_len = 12;
  const auto model = nmt::init_model(c, dsl::Task::kManipulation, corpus::english_vocabulary());
  const auto r =
      evaluate(translator_predictor(model), small_corpus(dsl::Task::kManipulation), dsl::Task::kManipulation, "t", {});
  CHECK(r.accuracy() + r.malformed_rate() + r.faulted_rate() <= 100.0 + 1e-9);
  CHECK(r.malformed_rate() > 0.0);
}

TEST_CASE("reports break accuracy down by family") {
  const auto samples = small_corpus(dsl::Task::kArrange);
  const auto r = evaluate(ground_truth_predictor(), samples, dsl::Task::kArrange, "gt", {});
  const auto fams = r.families();
  REQUIRE(fams.size() == 7);
  CHECK(fams.front().clauses == 1);
  CHECK(fams.back().family == "composite4");
  std::size_t total = 0;
  for (const auto& f : fams) {
    total += f.samples;
    CHECK(f.accuracy() == 100.0);
  }
  CHECK(total == samples.size());

  std::ostringstream out;
  write_report(out, r);
  CHECK(out.str().find("record model=gt task=arrange seed=0 scenes=20") != std::string::npos);
  CHECK(out.str().find("family name=composite4 clauses=4") != std::string::npos);
  std::ostringstream cmp;
  write_comparison(cmp, {r, r});
  CHECK(cmp.str().find("100.00%") != std::string::npos);
}
