#include "roboscript/eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <memory>
#include <ostream>
#include <thread>

#include "roboscript/corpus.hpp"

namespace roboscript::eval {

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kCorrect:
      return "correct";
    case Verdict::kIncorrect:
      return "incorrect";
    case Verdict::kMalformed:
      return "malformed";
    case Verdict::kFaulted:
      return "faulted";
  }
  return "incorrect";
}

namespace {

bool close(double a, double b, double tol) { return std::abs(a - b) < tol; }

}  // namespace

bool compare_placement(const interp::Placement& pred, const interp::Placement& ref) {
  if (pred.positions.size() != ref.positions.size()) return false;
  for (const auto& [cls, r] : ref.positions) {
    auto it = pred.positions.find(cls);
    if (it == pred.positions.end()) return false;
    if (!close(it->second.x, r.x, kPositionTolerance) || !close(it->second.y, r.y, kPositionTolerance)) return false;
  }
  return true;
}

bool compare_trajectory(const interp::Trajectory& pred, const interp::Trajectory& ref) {
  if (pred.events.size() != ref.events.size()) return false;
  for (std::size_t i = 0; i < ref.events.size(); ++i) {
    const auto& p = pred.events[i];
    const auto& r = ref.events[i];
    if (p.index() != r.index()) return false;
    if (const auto* rg = std::get_if<interp::Grip>(&r)) {
      if (std::get<interp::Grip>(p).engaged != rg->engaged) return false;
      continue;
    }
    const auto& pm = std::get<interp::Move>(p);
    const auto& rm = std::get<interp::Move>(r);
    if (!close(pm.x, rm.x, kPositionTolerance) || !close(pm.y, rm.y, kPositionTolerance) ||
        !close(pm.z, rm.z, kPositionTolerance) || !close(pm.r, rm.r, kRotationTolerance)) {
      return false;
    }
  }
  return true;
}

bool compare_outcome(const interp::ExecOutcome& pred, const interp::ExecOutcome& ref) {
  if (pred.index() != ref.index()) return false;
  if (const auto* r = std::get_if<interp::Placement>(&ref)) return compare_placement(std::get<interp::Placement>(pred), *r);
  if (const auto* r = std::get_if<interp::Trajectory>(&ref)) {
    return compare_trajectory(std::get<interp::Trajectory>(pred), *r);
  }
  return std::get<interp::RuntimeFault>(pred).kind == std::get<interp::RuntimeFault>(ref).kind;
}

Predictor ground_truth_predictor() {
  return [](const ParallelSample& sample) {
    Prediction p;
    auto program = std::make_shared<const dsl::Program>(parse_program(sample));
    p.run = [program](const scene::Scene& s) { return interp::execute(*program, s); };
    return p;
  };
}

Predictor translator_predictor(const nmt::Model& model) {
  return [&model](const ParallelSample& sample) {
    Prediction p;
    try {
      const auto t = nmt::translate(model, sample.instruction);
      if (t.truncated) {
        p.malformed = "no end of sequence within the decode limit";
        return p;
      }
      auto tokens = t.tokens;
      tokens.push_back(dsl::kEos);
      auto program = std::make_shared<const dsl::Program>(dsl::parse(tokens, sample.task));
      p.run = [program](const scene::Scene& s) { return interp::execute(*program, s); };
    } catch (const dsl::LexError& e) {
      p.malformed = e.what();
    } catch (const dsl::SyntaxError& e) {
      p.malformed = e.what();
    }
    return p;
  };
}

Predictor baseline_predictor(const baselines::Baseline& model) {
  return [&model](const ParallelSample& sample) {
    Prediction p;
    std::string instruction = sample.instruction;
    p.run = [&model, instruction](const scene::Scene& s) -> interp::ExecOutcome {
      auto target = baselines::predict(model, instruction, s);
      if (auto* placement = std::get_if<interp::Placement>(&target)) return std::move(*placement);
      return std::get<interp::Trajectory>(std::move(target));
    };
    return p;
  };
}

double FamilyStats::accuracy() const {
  return samples ? 100.0 * static_cast<double>(correct) / static_cast<double>(samples) : 0.0;
}

std::size_t Report::count(Verdict v) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [v](const SampleResult& r) { return r.verdict == v; }));
}

namespace {

double percent(std::size_t k, std::size_t n) { return n ? 100.0 * static_cast<double>(k) / static_cast<double>(n) : 0.0; }

}  // namespace

double Report::accuracy() const { return percent(count(Verdict::kCorrect), samples.size()); }
double Report::malformed_rate() const { return percent(count(Verdict::kMalformed), samples.size()); }
double Report::faulted_rate() const { return percent(count(Verdict::kFaulted), samples.size()); }

std::vector<FamilyStats> Report::families() const {
  std::map<std::string, FamilyStats> by_name;
  for (const auto& r : samples) {
    auto& f = by_name[r.family];
    f.family = r.family;
    f.clauses = corpus::clause_count(r.family);
    ++f.samples;
    if (r.verdict == Verdict::kCorrect) ++f.correct;
    if (r.verdict == Verdict::kMalformed) ++f.malformed;
    if (r.verdict == Verdict::kFaulted) ++f.faulted;
  }
  std::vector<FamilyStats> out;
  for (auto& [name, f] : by_name) out.push_back(f);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.clauses < b.clauses; });
  return out;
}

namespace {

SampleResult judge(const Predictor& predictor, const ParallelSample& sample, const EvalOptions& options) {
  SampleResult r;
  r.id = sample.id;
  r.family = sample.template_family;
  Prediction prediction = predictor(sample);
  if (prediction.malformed) {
    r.verdict = Verdict::kMalformed;
    r.detail = *prediction.malformed;
    return r;
  }
  const auto reference = interp::execute_ground_truth_batch(sample, options.n_scenes, options.seed);
  bool faulted = false;
  for (std::size_t k = 0; k < reference.size(); ++k) {
    const auto& [scene, expected] = reference[k];
    const auto got = prediction.run(scene);
    if (compare_outcome(got, expected)) {
      ++r.scenes_passed;
      continue;
    }
    if (r.detail.empty()) {
      r.detail = interp::is_fault(got)
                     ? fmt::format("scene {}: {}", k, interp::fault_name(std::get<interp::RuntimeFault>(got).kind))
                     : fmt::format("scene {}: mismatch", k);
    }
    faulted = faulted || interp::is_fault(got);
  }
  if (r.scenes_passed == reference.size()) {
    r.verdict = Verdict::kCorrect;
  } else {
    r.verdict = faulted ? Verdict::kFaulted : Verdict::kIncorrect;
  }
  return r;
}

}  // namespace

Report evaluate(const Predictor& predictor, const std::vector<ParallelSample>& samples, dsl::Task task,
                std::string model_name, const EvalOptions& options) {
  if (options.n_scenes == 0) throw PreconditionError("evaluation needs at least one scene");
  Report report;
  report.model = std::move(model_name);
  report.task = task;
  report.seed = options.seed;
  report.n_scenes = options.n_scenes;
  std::vector<const ParallelSample*> todo;
  for (const auto& s : samples) {
    if (s.task == task) todo.push_back(&s);
  }
  report.samples.resize(todo.size());
  std::size_t threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(todo.size(), 1));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < todo.size();) report.samples[i] = judge(predictor, *todo[i], options);
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return report;
}

void write_report(std::ostream& out, const Report& r) {
  out << fmt::format("model      {}\n", r.model);
  out << fmt::format("task       {}\n", dsl::task_name(r.task));
  out << fmt::format("seed       {}\n", r.seed);
  out << fmt::format("scenes     {}\n", r.n_scenes);
  out << fmt::format("samples    {}\n", r.samples.size());
  out << fmt::format("accuracy   {:6.2f}%\n", r.accuracy());
  out << fmt::format("malformed  {:6.2f}%\n", r.malformed_rate());
  out << fmt::format("faulted    {:6.2f}%\n\n", r.faulted_rate());
  out << fmt::format("{:<22} {:>7} {:>7} {:>7} {:>9} {:>9}\n", "family", "clauses", "samples", "correct",
                     "malformed", "accuracy");
  const auto fams = r.families();
  for (const auto& f : fams) {
    out << fmt::format("{:<22} {:>7} {:>7} {:>7} {:>9} {:>8.2f}%\n", f.family, f.clauses, f.samples, f.correct,
                       f.malformed, f.accuracy());
  }
  out << '\n';
  out << fmt::format(
      "record model={} task={} seed={} scenes={} samples={} correct={} malformed={} faulted={} accuracy={:.2f} "
      "malformed_rate={:.2f} faulted_rate={:.2f}\n",
      r.model, dsl::task_name(r.task), r.seed, r.n_scenes, r.samples.size(), r.count(Verdict::kCorrect),
      r.count(Verdict::kMalformed), r.count(Verdict::kFaulted), r.accuracy(), r.malformed_rate(), r.faulted_rate());
  for (const auto& f : fams) {
    out << fmt::format("family name={} clauses={} samples={} correct={} malformed={} faulted={} accuracy={:.2f}\n",
                       f.family, f.clauses, f.samples, f.correct, f.malformed, f.faulted, f.accuracy());
  }
  for (const auto& s : r.samples) {
    out << fmt::format("sample id={} verdict={} passed={}/{}", s.id, verdict_name(s.verdict), s.scenes_passed,
                       r.n_scenes);
    if (!s.detail.empty()) {
      std::string detail = s.detail;
      std::replace(detail.begin(), detail.end(), '"', '\'');
      out << " detail=\"" << detail << '"';
    }
    out << '\n';
  }
}

void write_comparison(std::ostream& out, const std::vector<Report>& reports) {
  out << fmt::format("{:<10} {:<28} {:>8} {:>10} {:>10} {:>9}\n", "task", "model", "samples", "accuracy",
                     "malformed", "faulted");
  for (const auto& r : reports) {
    out << fmt::format("{:<10} {:<28} {:>8} {:>9.2f}% {:>9.2f}% {:>8.2f}%\n", dsl::task_name(r.task), r.model,
                       r.samples.size(), r.accuracy(), r.malformed_rate(), r.faulted_rate());
  }
}

}  // namespace roboscript::eval
