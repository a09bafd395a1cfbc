// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Criteria 5 to 9 share one corpus/training/evaluation pipeline per task.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <iostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "lp_oracle.hpp"
#include "roboscript/baselines.hpp"
#include "roboscript/corpus.hpp"
#include "roboscript/eval.hpp"
#include "roboscript/interp.hpp"
#include "roboscript/nmt.hpp"
#include "roboscript/solver.hpp"

namespace rs = roboscript;
using rs::dsl::Task;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  int id;
  bool pass;
  std::string summary;
};

Verdict verdict(int id, bool pass, std::string summary) { return {id, pass, std::move(summary)}; }

void log(const std::string& line) { std::cerr << line << std::endl; }

// ---------------------------------------------------------------- 1 to 4

Verdict gradients(std::uint64_t seed) {
  const auto t0 = Clock::now();
  const auto r = rs::nmt::grad_check(rs::nmt::tiny_config(), seed);
  const double secs = seconds_since(t0);
  return verdict(1, r.max_rel_error < 1e-4 && secs < 60.0,
                 fmt::format("max_rel_error={:.3e} entries={} tensors={} time={:.1f}s", r.max_rel_error, r.entries,
                             r.per_tensor.size(), secs));
}

Verdict attention(std::uint64_t seed) {
  const auto t0 = Clock::now();
  rs::nmt::ModelConfig c;
  c.seed = seed;
  const auto model = rs::nmt::init_model(c, Task::kArrange, rs::corpus::english_vocabulary());
  const auto& p = model.params;
  rs::Rng rng(rs::derive_seed({seed, 0x617474}));
  const auto n_src = rs::corpus::english_vocabulary().size();
  const auto n_tgt = static_cast<std::uint64_t>(p.target_embedding.cols());
  double worst_sum = 0.0;
  double worst_excess = -1e300;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<int> src;
    const auto n = 1 + rng.below(16);
    for (std::uint64_t i = 0; i < n; ++i) src.push_back(static_cast<int>(rng.below(n_src)));
    const auto enc = rs::nmt::encode(p, src);
    const auto H = enc.final.h.size();
    rs::nmt::DecoderState st{rs::nn::uniform_matrix(H, 1, 1.0, rng).col(0), rs::nn::uniform_matrix(H, 1, 1.0, rng).col(0)};
    const auto d = rs::nmt::decode_step(p, static_cast<int>(rng.below(n_tgt)), st, enc.states);
    worst_sum = std::max(worst_sum, std::abs(d.alignment.sum() - 1.0));
    double max_norm = 0.0;
    for (Eigen::Index s = 0; s < enc.states.cols(); ++s) max_norm = std::max(max_norm, enc.states.col(s).norm());
    worst_excess = std::max(worst_excess, d.context.norm() - max_norm);
  }
  return verdict(2, worst_sum <= 1e-6 && worst_excess <= 1e-9,
                 fmt::format("steps=1000 max|sum-1|={:.2e} max(|context|-max|state|)={:.2e} time={:.1f}s", worst_sum,
                             worst_excess, seconds_since(t0)));
}

rs::solver::Solver load(const oracle::System& s) {
  rs::solver::Solver solver;
  for (int j = 0; j < s.num_vars; ++j) solver.add_variable("v" + std::to_string(j));
  for (const auto& c : s.constraints) solver.add_constraint(c);
  return solver;
}

// Solve, branch on the intermediate solution, constrain again, solve.
constexpr const char* kTwoPhase =
    "require px_orange == 0.5 - orange .w / 2 require py_orange == 0 solve "
    "if value ( px_orange ) > 0 require px_apple == value ( px_orange ) - orange .w / 2 - apple .w / 2 - 0.05 "
    "else require px_apple == px_orange + orange .w / 2 + apple .w / 2 + 0.05 end "
    "require py_apple == py_orange require px_cup >= px_apple + 0.1 require py_cup == 0.5 solve";

Verdict solver_oracle(std::uint64_t seed) {
  const auto t0 = Clock::now();
  rs::Rng rng(rs::derive_seed({seed, 0x736f6c}));
  double worst_gap = 0.0, worst_violation = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto sys = oracle::random_system(rng);
    auto solver = load(sys);
    const auto& sol = solver.solve();
    for (const auto& c : sys.constraints) {
      if (c.strength == rs::solver::Strength::kRequired) {
        worst_violation = std::max(worst_violation, rs::solver::violation(c, sol.values()));
      }
    }
    worst_gap = std::max(worst_gap, std::abs(sol.objective() - oracle::vertex_enumeration(sys)));
  }
  double worst_grid = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto sys = oracle::random_grid_system(rng);
    auto solver = load(sys);
    worst_grid = std::max(worst_grid, std::abs(solver.solve().objective() - oracle::grid_search(sys)));
  }

  using rs::scene::ObjectClass;
  const auto program = rs::dsl::parse_text(kTwoPhase, Task::kArrange);
  const std::vector<ObjectClass> classes{ObjectClass::kApple, ObjectClass::kOrange, ObjectClass::kCup};
  double worst_program = 0.0;
  for (std::uint64_t k = 0; k < 50; ++k) {
    const auto scene = rs::scene::generate_scene(classes, rs::derive_seed({seed, 0x747770, k}));
    const auto out = rs::interp::execute(program, scene);
    const auto* placed = std::get_if<rs::interp::Placement>(&out);
    if (!placed) {
      worst_program = 1e300;
      break;
    }
    const auto& pos = placed->positions;
    const double ow = scene.lookup(ObjectClass::kOrange)->w;
    const double aw = scene.lookup(ObjectClass::kApple)->w;
    const auto o = pos.at(ObjectClass::kOrange), a = pos.at(ObjectClass::kApple), c = pos.at(ObjectClass::kCup);
    const double errs[] = {
        std::abs(o.x - (0.5 - ow / 2)), std::abs(o.y),  std::abs(a.x - (o.x - ow / 2 - aw / 2 - 0.05)),
        std::abs(a.y - o.y),           std::max(0.0, a.x + 0.1 - c.x), std::abs(c.y - 0.5)};
    for (double e : errs) worst_program = std::max(worst_program, e);
  }
  const double secs = seconds_since(t0);
  const bool pass = worst_gap <= 2e-3 && worst_violation <= 1e-6 && worst_grid <= 2e-3 && worst_program <= 1e-6 &&
                    secs < 120.0;
  return verdict(3, pass,
                 fmt::format("systems=500 max_objective_gap={:.2e} max_required_violation={:.2e} "
                             "grid_systems=100 max_grid_gap={:.2e} two_phase_scenes=50 max_error={:.2e} time={:.1f}s",
                             worst_gap, worst_violation, worst_grid, worst_program, secs));
}

Verdict self_consistency(const std::vector<std::vector<rs::ParallelSample>>& corpora, std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::size_t n = 0, correct = 0, malformed = 0;
  for (const auto& corpus : corpora) {
    const Task task = corpus.front().task;
    rs::eval::EvalOptions o;
    o.seed = seed;
    const auto r = rs::eval::evaluate(rs::eval::ground_truth_predictor(), corpus, task, "ground-truth", o);
    n += r.samples.size();
    correct += r.count(rs::eval::Verdict::kCorrect);
    malformed += r.count(rs::eval::Verdict::kMalformed);
  }
  const double secs = seconds_since(t0);
  return verdict(4, n > 0 && correct == n && malformed == 0 && secs < 60.0,
                 fmt::format("programs={} accuracy={:.2f}% malformed={:.2f}% time={:.1f}s", n, 100.0 * correct / n,
                             100.0 * malformed / n, secs));
}

// ---------------------------------------------------------------- shared pipeline

struct Probe {
  double accuracy = 0.0;
  int first_epoch = 0;  // first epoch whose running accuracy reached 99%, 0 if none
  double seconds = 0.0;
};

// Base ids end in a sample number, augmented copies in `.aNNN`.
bool is_copy(const std::string& id) {
  const auto dot = id.rfind('.');
  return dot != std::string::npos && dot + 1 < id.size() && id[dot + 1] == 'a';
}

// 16 base train samples, 200 epochs, default model at batch 2.
Probe overfit_probe(const std::vector<rs::ParallelSample>& corpus, Task task, std::uint64_t seed) {
  const auto t0 = Clock::now();
  std::vector<rs::ParallelSample> subset;
  for (const auto& s : corpus) {
    if (s.split == rs::Split::kTrain && !is_copy(s.id) && subset.size() < 16) subset.push_back(s);
  }
  rs::nmt::ModelConfig c;
  c.seed = seed;
  rs::nmt::TrainOptions o;
  o.epochs = 200;
  o.batch_size = 2;
  Probe p;
  o.on_epoch = [&](const rs::nmt::EpochStats& e) {
    if (p.first_epoch == 0 && e.token_accuracy >= 0.99) p.first_epoch = e.epoch;
  };
  const auto r = rs::nmt::train(c, task, subset, o);
  p.accuracy = rs::nmt::evaluate_examples(r.model.params, rs::nmt::make_examples(r.model, subset)).accuracy();
  p.seconds = seconds_since(t0);
  return p;
}

struct Pipeline {
  Task task;
  std::size_t n_train = 0, n_test = 0, n_direct = 0;
  double initial_loss = 0.0, final_loss = 0.0;
  double nmt_seconds = 0.0, total_seconds = 0.0;
  rs::eval::Report translator, baseline;
  std::size_t pairs = 0, identical = 0;
};

Pipeline run_pipeline(const std::vector<rs::ParallelSample>& corpus, Task task, std::uint64_t seed,
                      std::size_t threads) {
  const auto t0 = Clock::now();
  const std::string name(rs::dsl::task_name(task));
  Pipeline out;
  out.task = task;
  const auto train = rs::corpus::filter(corpus, task, rs::Split::kTrain);
  const auto test = rs::corpus::filter(corpus, task, rs::Split::kTest);
  out.n_train = train.size();
  out.n_test = test.size();

  rs::nmt::ModelConfig mc;
  mc.seed = seed;
  rs::nmt::TrainOptions no;
  no.on_epoch = [&](const rs::nmt::EpochStats& e) {
    log(fmt::format("[{}] translator epoch {:>2} loss {:.5f} token_accuracy {:.4f} ({:.0f}s)", name, e.epoch, e.loss,
                    e.token_accuracy, seconds_since(t0)));
  };
  const auto nmt = rs::nmt::train(mc, task, train, no);
  out.initial_loss = nmt.initial_loss;
  out.final_loss = nmt.epochs.back().loss;
  out.nmt_seconds = seconds_since(t0);

  const auto direct = rs::corpus::derive_direct_dataset(train, rs::baselines::kTrainingScenes, seed);
  out.n_direct = direct.samples.size();
  rs::baselines::BaselineConfig bc;
  bc.seed = seed;
  rs::baselines::TrainOptions bo;
  bo.on_epoch = [&](int epoch, double loss) {
    log(fmt::format("[{}] baseline epoch {:>2} loss {:.5f} ({:.0f}s)", name, epoch, loss, seconds_since(t0)));
  };
  const auto base = rs::baselines::train_baseline(bc, task, direct.samples, bo);

  rs::eval::EvalOptions eo;
  eo.seed = seed;
  eo.threads = threads;
  out.translator = rs::eval::evaluate(rs::eval::translator_predictor(nmt.model), test, task, "translator", eo);
  out.baseline = rs::eval::evaluate(rs::eval::baseline_predictor(base.model), test, task, "baseline", eo);

  for (const auto& s : test) {
    const auto original = rs::nmt::translate(nmt.model, s.instruction);
    for (const auto& variant : rs::corpus::synonym_paraphrases(s.instruction)) {
      const auto t = rs::nmt::translate(nmt.model, variant);
      ++out.pairs;
      if (!t.truncated && !original.truncated && t.tokens == original.tokens) ++out.identical;
    }
  }
  out.total_seconds = seconds_since(t0);
  log(fmt::format("[{}] pipeline done in {:.0f}s", name, out.total_seconds));
  return out;
}

double one_clause_accuracy(const rs::eval::Report& r, std::size_t* n) {
  std::size_t samples = 0, correct = 0;
  for (const auto& f : r.families()) {
    if (f.clauses != 1) continue;
    samples += f.samples;
    correct += f.correct;
  }
  *n = samples;
  return samples ? 100.0 * correct / samples : 0.0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance run: one PASS/FAIL line per criterion"};
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  std::set<int> only;
  app.add_option("--seed", seed, "Seed for corpora, models and scenes")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads (0: all cores)")->capture_default_str();
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 9))->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  auto wanted = [&](int id) { return only.empty() || only.count(id); };
  const auto run_start = Clock::now();
  const bool parallel = threads != 1 && std::thread::hardware_concurrency() > 1;

  std::vector<Verdict> verdicts;
  auto emit = [&](Verdict v) {
    std::cout << fmt::format("criterion {} {} {}", v.id, v.pass ? "PASS" : "FAIL", v.summary) << std::endl;
    verdicts.push_back(std::move(v));
  };

  if (wanted(1)) emit(gradients(seed));
  if (wanted(2)) emit(attention(seed));
  if (wanted(3)) emit(solver_oracle(seed));

  const bool shared = wanted(5) || wanted(6) || wanted(7) || wanted(8) || wanted(9);
  const auto corpus_start = Clock::now();
  std::vector<std::vector<rs::ParallelSample>> corpora;
  if (wanted(4) || shared) {
    for (Task t : {Task::kArrange, Task::kManipulation}) {
      corpora.push_back(rs::corpus::build_corpus(t, 0, rs::corpus::default_augmentation(t), seed));
    }
  }
  const double corpus_seconds = seconds_since(corpus_start);
  if (wanted(4)) emit(self_consistency(corpora, seed));
  if (!shared) return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; }) ? 0 : 1;

  // The two tasks are independent; run them side by side when cores allow.
  const auto shared_start = Clock::now();
  std::vector<Pipeline> pipes;
  std::vector<Probe> probes;
  if (parallel) {
    auto pa = std::async(std::launch::async, [&] { return run_pipeline(corpora[0], Task::kArrange, seed, threads); });
    auto pm =
        std::async(std::launch::async, [&] { return run_pipeline(corpora[1], Task::kManipulation, seed, threads); });
    const auto probe_start = Clock::now();
    probes.push_back(overfit_probe(corpora[0], Task::kArrange, seed));
    probes.push_back(overfit_probe(corpora[1], Task::kManipulation, seed));
    log(fmt::format("overfit probes done in {:.0f}s", seconds_since(probe_start)));
    pipes.push_back(pa.get());
    pipes.push_back(pm.get());
  } else {
    probes.push_back(overfit_probe(corpora[0], Task::kArrange, seed));
    probes.push_back(overfit_probe(corpora[1], Task::kManipulation, seed));
    log(fmt::format("overfit probes done in {:.0f}s", probes[0].seconds + probes[1].seconds));
    pipes.push_back(run_pipeline(corpora[0], Task::kArrange, seed, threads));
    pipes.push_back(run_pipeline(corpora[1], Task::kManipulation, seed, threads));
  }
  const double shared_seconds = seconds_since(shared_start);

  if (wanted(5)) {
    // Wall time of the probes plus the full-split translator training.
    const double secs = parallel ? std::max({pipes[0].nmt_seconds, pipes[1].nmt_seconds,
                                             probes[0].seconds + probes[1].seconds})
                                 : probes[0].seconds + probes[1].seconds + pipes[0].nmt_seconds + pipes[1].nmt_seconds;
    bool pass = secs < 15 * 60.0;
    std::string s;
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& p = probes[k];
      const auto& q = pipes[k];
      pass = pass && p.accuracy >= 0.99 && q.final_loss < q.initial_loss / 3.0;
      s += fmt::format("{}: probe_accuracy={:.2f}% first_epoch_99={} train={} loss {:.4f} -> {:.4f} (ratio {:.4f}); ",
                       rs::dsl::task_name(q.task), 100.0 * p.accuracy, p.first_epoch, q.n_train, q.initial_loss,
                       q.final_loss, q.final_loss / q.initial_loss);
    }
    emit(verdict(5, pass, s + fmt::format("time={:.1f}s", secs)));
  }
  if (wanted(6)) {
    const double secs = corpus_seconds + shared_seconds;
    bool pass = secs < 30 * 60.0;
    std::string s;
    for (const auto& q : pipes) {
      const double gap = q.translator.accuracy() - q.baseline.accuracy();
      pass = pass && gap >= 30.0;
      s += fmt::format("{}: translator={:.2f}% baseline={:.2f}% gap={:.2f} test={} scenes={}; ",
                       rs::dsl::task_name(q.task), q.translator.accuracy(), q.baseline.accuracy(), gap, q.n_test,
                       q.translator.n_scenes);
    }
    emit(verdict(6, pass, s + fmt::format("time={:.1f}s", secs)));
  }
  if (wanted(7)) {
    bool pass = true;
    std::string s;
    for (const auto& q : pipes) {
      pass = pass && q.translator.malformed_rate() <= 5.0;
      s += fmt::format("{}: malformed={:.2f}% ", rs::dsl::task_name(q.task), q.translator.malformed_rate());
    }
    emit(verdict(7, pass, s));
  }
  if (wanted(8)) {
    std::size_t pairs = 0, identical = 0;
    std::string s;
    for (const auto& q : pipes) {
      pairs += q.pairs;
      identical += q.identical;
      s += fmt::format("{}: {}/{} ", rs::dsl::task_name(q.task), q.identical, q.pairs);
    }
    const double rate = pairs ? 100.0 * identical / pairs : 0.0;
    emit(verdict(8, pairs >= 10 && rate >= 80.0, s + fmt::format("identical={:.2f}% of {} pairs", rate, pairs)));
  }
  if (wanted(9)) {
    const auto& r = pipes[0].translator;
    std::size_t n1 = 0;
    const double one = one_clause_accuracy(r, &n1);
    double four = -1.0;
    std::size_t n4 = 0;
    std::cout << "family breakdown (arrange translator):\n";
    for (const auto& f : r.families()) {
      std::cout << fmt::format("  {:<14} clauses={} samples={:>4} accuracy={:6.2f}% malformed={} faulted={}\n",
                               f.family, f.clauses, f.samples, f.accuracy(), f.malformed, f.faulted);
      if (f.clauses == 4) {
        four = f.accuracy();
        n4 = f.samples;
      }
    }
    emit(verdict(9, n1 > 0 && n4 > 0 && four <= one,
                 fmt::format("one_clause={:.2f}% (n={}) four_clause={:.2f}% (n={})", one, n1, four, n4)));
  }

  std::cout << "comparison:\n";
  std::vector<rs::eval::Report> reports;
  for (const auto& q : pipes) {
    reports.push_back(q.translator);
    reports.push_back(q.baseline);
  }
  rs::eval::write_comparison(std::cout, reports);
  std::cout << fmt::format("total time {:.1f}s\n", seconds_since(run_start));
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; }) ? 0 : 1;
}
