// roboscript: corpus generation, training, translation, execution and
// evaluation from one command line.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "roboscript/baselines.hpp"
#include "roboscript/corpus.hpp"
#include "roboscript/eval.hpp"
#include "roboscript/interp.hpp"
#include "roboscript/nmt.hpp"
#include "roboscript/rng.hpp"

namespace rs = roboscript;
using rs::dsl::Task;

namespace {

enum Exit : int { kOk = 0, kFailure = 1, kUsage = 2, kMalformed = 3, kFault = 4, kTraining = 5 };

// Thrown by subcommands for failures that are not library errors.
struct CliError {
  int code;
  std::string kind;
  std::string message;
};

std::string quoted(std::string s) {
  for (auto& c : s) {
    if (c == '"') c = '\'';
    if (c == '\n') c = ' ';
  }
  return '"' + s + '"';
}

int report_error(int code, const std::string& kind, const std::string& message) {
  std::cerr << "error: kind=" << kind << " exit=" << code << " message=" << quoted(message) << '\n';
  return code;
}

Task parse_task(const std::string& name) {
  if (auto t = rs::dsl::task_from_name(name)) return *t;
  if (name == "manipulation") return Task::kManipulation;
  throw CliError{kUsage, "UsageError", "unknown task '" + name + "' (expected arrange or manip)"};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rs::IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// First line of a checkpoint names its kind.
bool is_baseline_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rs::IoError("cannot open " + path);
  std::string magic;
  in >> magic;
  return magic == "roboscript-baseline";
}

void write_to(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw rs::IoError("cannot write " + path);
  out << text;
}

rs::scene::Scene scene_for(const rs::dsl::Program& program, const std::string& scene_path, std::uint64_t seed) {
  if (!scene_path.empty()) return rs::scene::read_scene_file(scene_path);
  return rs::scene::generate_scene(rs::interp::rollout_classes(program), seed);
}

// Attention mass each source word receives, averaged over decode steps.
std::string attention_summary(const rs::nmt::Translation& t) {
  if (t.attention.rows() == 0) return "";
  const rs::nn::Vec mass = t.attention.colwise().mean().transpose();
  std::string out;
  for (std::size_t s = 0; s < t.source.size(); ++s) {
    out += fmt::format("{}{}:{:.2f}", s ? " " : "", t.source[s], mass(static_cast<Eigen::Index>(s)));
  }
  return out;
}

rs::nmt::Translation translate_checked(const rs::nmt::Model& model, const std::string& instruction) {
  auto t = rs::nmt::translate(model, instruction);
  if (t.truncated) {
    throw CliError{kMalformed, "Malformed",
                   fmt::format("no end of sequence within {} decode steps", model.config.max_decode_len)};
  }
  return t;
}

struct Globals {
  std::uint64_t seed = 1;
  bool verbose = false;
};

// ---------------------------------------------------------------- subcommands

struct GenCorpusArgs {
  std::string task = "both";
  std::size_t n_base = 0;
  std::optional<std::size_t> n_aug;
  std::string out;
  std::string direct;
  std::size_t scenes = rs::corpus::kDirectScenes;
};

int gen_corpus(const GenCorpusArgs& a, const Globals& g) {
  std::vector<Task> tasks;
  if (a.task == "both") {
    tasks = {Task::kArrange, Task::kManipulation};
  } else {
    tasks = {parse_task(a.task)};
  }
  std::vector<rs::ParallelSample> all;
  for (Task t : tasks) {
    const auto samples = rs::corpus::build_corpus(t, a.n_base, a.n_aug.value_or(rs::corpus::default_augmentation(t)),
                                                  g.seed);
    std::size_t n[3] = {0, 0, 0};
    for (const auto& s : samples) ++n[static_cast<int>(s.split)];
    std::cerr << fmt::format("{}: {} samples (train {}, dev {}, test {})\n", rs::dsl::task_name(t), samples.size(),
                             n[0], n[1], n[2]);
    all.insert(all.end(), samples.begin(), samples.end());
  }
  std::ostringstream corpus;
  rs::corpus::write_corpus(corpus, all);
  write_to(a.out, corpus.str());
  if (!a.direct.empty()) {
    std::vector<rs::ParallelSample> train;
    for (const auto& s : all) {
      if (s.split == rs::Split::kTrain) train.push_back(s);
    }
    const auto ds = rs::corpus::derive_direct_dataset(train, a.scenes, g.seed, g.verbose ? &std::cerr : nullptr);
    std::ostringstream direct;
    rs::corpus::write_direct_dataset(direct, ds.samples);
    write_to(a.direct, direct.str());
    std::cerr << fmt::format("direct: {} samples, {} faulted rollouts skipped\n", ds.samples.size(), ds.skipped);
  }
  return kOk;
}

struct TrainArgs {
  std::string corpus;
  std::string task;
  std::string out;
  int epochs = 10;
  std::size_t batch = 16;
  double lr = 1e-3;
  int embed = 64;
  int hidden = 128;
  int head = 128;
};

std::vector<rs::ParallelSample> train_split(const std::string& corpus_path, Task task) {
  const auto train = rs::corpus::filter(rs::corpus::read_corpus_file(corpus_path), task, rs::Split::kTrain);
  if (train.empty()) throw CliError{kTraining, "EmptyTrainingSet", "no train samples for this task in " + corpus_path};
  return train;
}

int train(const TrainArgs& a, const Globals& g) {
  const Task task = parse_task(a.task);
  const auto samples = train_split(a.corpus, task);
  rs::nmt::ModelConfig c;
  c.embed_dim = a.embed;
  c.hidden_dim = a.hidden;
  c.head_dim = a.head;
  c.seed = g.seed;
  rs::nmt::TrainOptions o;
  o.epochs = a.epochs;
  o.batch_size = a.batch;
  o.learning_rate = a.lr;
  o.on_epoch = [](const rs::nmt::EpochStats& e) {
    std::cerr << fmt::format("epoch {:>3}  loss {:.6f}  token_accuracy {:.4f}\n", e.epoch, e.loss, e.token_accuracy);
  };
  std::cerr << fmt::format("training on {} samples\n", samples.size());
  const auto r = rs::nmt::train(c, task, samples, o);
  std::cerr << fmt::format("initial loss {:.6f}\n", r.initial_loss);
  rs::nmt::save_model_file(a.out, r.model);
  return kOk;
}

struct TrainBaselineArgs {
  std::string corpus;
  std::string task;
  std::string out;
  std::size_t scenes = rs::baselines::kTrainingScenes;
  int epochs = 10;
  std::size_t batch = 16;
  double lr = 1e-3;
};

int train_baseline(const TrainBaselineArgs& a, const Globals& g) {
  const Task task = parse_task(a.task);
  const auto samples = train_split(a.corpus, task);
  const auto ds = rs::corpus::derive_direct_dataset(samples, a.scenes, g.seed, g.verbose ? &std::cerr : nullptr);
  rs::baselines::BaselineConfig c;
  c.seed = g.seed;
  rs::baselines::TrainOptions o;
  o.epochs = a.epochs;
  o.batch_size = a.batch;
  o.learning_rate = a.lr;
  o.on_epoch = [](int epoch, double loss) { std::cerr << fmt::format("epoch {:>3}  loss {:.6f}\n", epoch, loss); };
  std::cerr << fmt::format("training on {} direct samples ({} skipped)\n", ds.samples.size(), ds.skipped);
  const auto r = rs::baselines::train_baseline(c, task, ds.samples, o);
  std::cerr << fmt::format("initial loss {:.6f}\n", r.initial_loss);
  rs::baselines::save_baseline_file(a.out, r.model);
  return kOk;
}

struct TranslateArgs {
  std::string ckpt;
  std::string instruction;
  std::string attention;
};

int translate(const TranslateArgs& a, const Globals&) {
  const auto model = rs::nmt::load_model_file(a.ckpt);
  const auto t = translate_checked(model, a.instruction);
  std::cout << rs::dsl::format_tokens(t.tokens);
  if (!a.attention.empty()) {
    std::ostringstream csv;
    rs::nmt::write_attention_csv(csv, t);
    write_to(a.attention, csv.str());
  }
  // A translation that does not parse is still printed, then reported.
  rs::dsl::parse(t.tokens, model.task);
  return kOk;
}

struct RunArgs {
  std::string task;
  std::string program;
  std::string text;
  std::string scene;
};

int run(const RunArgs& a, const Globals& g) {
  const Task task = parse_task(a.task);
  if (a.program.empty() == a.text.empty()) {
    throw CliError{kUsage, "UsageError", "exactly one of --program and --text is required"};
  }
  const auto program = rs::dsl::parse_text(a.text.empty() ? slurp(a.program) : a.text, task);
  const auto scene = scene_for(program, a.scene, g.seed);
  const auto outcome = rs::interp::execute(program, scene);
  std::cout << rs::interp::format_outcome(outcome);
  if (const auto* f = std::get_if<rs::interp::RuntimeFault>(&outcome)) {
    throw CliError{kFault, "RuntimeFault",
                   fmt::format("{} at step {}: {}", rs::interp::fault_name(f->kind), f->step, f->detail)};
  }
  return kOk;
}

struct EvaluateArgs {
  std::string ckpt;
  bool ground_truth = false;
  std::string corpus;
  std::string task;
  std::string split = "test";
  std::size_t scenes = rs::eval::kDefaultScenes;
  std::size_t threads = 0;
  std::string out;
};

int evaluate(const EvaluateArgs& a, const Globals& g) {
  if (a.ckpt.empty() == !a.ground_truth) {
    throw CliError{kUsage, "UsageError", "exactly one of --ckpt and --ground-truth is required"};
  }
  const auto split = rs::split_from_name(a.split);
  if (!split) throw CliError{kUsage, "UsageError", "unknown split '" + a.split + "'"};
  const auto corpus = rs::corpus::read_corpus_file(a.corpus);
  rs::eval::EvalOptions o;
  o.n_scenes = a.scenes;
  o.seed = g.seed;
  o.threads = a.threads;

  std::optional<rs::nmt::Model> model;
  std::optional<rs::baselines::Baseline> baseline;
  rs::eval::Predictor predictor;
  std::string name;
  Task task;
  if (a.ground_truth) {
    if (a.task.empty()) throw CliError{kUsage, "UsageError", "--ground-truth needs --task"};
    task = parse_task(a.task);
    predictor = rs::eval::ground_truth_predictor();
    name = "ground-truth";
  } else if (is_baseline_checkpoint(a.ckpt)) {
    baseline = rs::baselines::load_baseline_file(a.ckpt);
    task = baseline->task;
    predictor = rs::eval::baseline_predictor(*baseline);
    name = "baseline";
  } else {
    model = rs::nmt::load_model_file(a.ckpt);
    task = model->task;
    predictor = rs::eval::translator_predictor(*model);
    name = "translator";
  }
  if (!a.task.empty() && parse_task(a.task) != task) {
    throw CliError{kUsage, "UsageError", "--task does not match the checkpoint"};
  }
  const auto samples = rs::corpus::filter(corpus, task, *split);
  const auto report = rs::eval::evaluate(predictor, samples, task, name, o);
  std::ostringstream text;
  rs::eval::write_report(text, report);
  write_to(a.out, text.str());
  return kOk;
}

int grad_check(const Globals& g) {
  const auto r = rs::nmt::grad_check(rs::nmt::tiny_config(), g.seed);
  for (const auto& [name, err] : r.per_tensor) std::cout << fmt::format("{:<20} {:.3e}\n", name, err);
  std::cout << fmt::format("max_rel_error {:.3e} over {} entries\n", r.max_rel_error, r.entries);
  if (!(r.max_rel_error < 1e-4)) {
    throw CliError{kFailure, "GradCheckFailed", fmt::format("max relative error {:.3e} >= 1e-4", r.max_rel_error)};
  }
  return kOk;
}

struct ReplArgs {
  std::string ckpt;
  std::string scene;
};

int repl(const ReplArgs& a, const Globals& g) {
  const auto model = rs::nmt::load_model_file(a.ckpt);
  std::optional<rs::scene::Scene> fixed;
  if (!a.scene.empty()) fixed = rs::scene::read_scene_file(a.scene);
  std::cout << fmt::format("{} translator ready; empty line or :quit exits\n", rs::dsl::task_name(model.task));
  std::uint64_t turn = 0;
  for (std::string line;;) {
    std::cout << "> " << std::flush;
    if (!std::getline(std::cin, line) || line.empty() || line == ":quit") break;
    try {
      const auto t = translate_checked(model, line);
      const auto program = rs::dsl::parse(t.tokens, model.task);
      std::cout << rs::dsl::format_program(program);
      std::cout << "attention " << attention_summary(t) << '\n';
      std::cout << "execute? [y/N] " << std::flush;
      std::string answer;
      if (!std::getline(std::cin, answer)) break;
      if (answer != "y" && answer != "yes") continue;
      const auto scene = fixed ? *fixed : scene_for(program, "", rs::derive_seed({g.seed, turn++}));
      if (!fixed) rs::scene::write_scene(std::cout, scene);
      std::cout << rs::interp::format_outcome(rs::interp::execute(program, scene));
    } catch (const rs::Error& e) {
      std::cout << "error: kind=" << e.kind() << " message=" << quoted(e.what()) << '\n';
    } catch (const CliError& e) {
      std::cout << "error: kind=" << e.kind << " message=" << quoted(e.message) << '\n';
    }
  }
  return kOk;
}

int exit_code_for(const rs::Error& e) {
  const auto& k = e.kind();
  if (k == "LexError" || k == "SyntaxError" || k == "UnknownSourceToken") return kMalformed;
  if (k == "NonFiniteLoss") return kTraining;
  return kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RoboScript: natural-language instructions to robot programs"};
  app.name("roboscript");
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for generation, training and evaluation")->capture_default_str();
  app.add_flag("--verbose", g.verbose, "Log skipped rollouts and other details to stderr");

  GenCorpusArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "Generate and augment the parallel corpus");
  gen_cmd->add_option("--task", gen.task, "arrange, manip or both")->capture_default_str();
  gen_cmd->add_option("--n-base", gen.n_base, "Base samples per task (0: 124 arrange, 146 manip)")
      ->capture_default_str();
  gen_cmd->add_option("--n-aug", gen.n_aug, "Class-swapped copies per sample (default per task)");
  gen_cmd->add_option("--out", gen.out, "Corpus file (- for stdout)")->required();
  gen_cmd->add_option("--direct", gen.direct, "Also write the direct-supervision dataset of the train split");
  gen_cmd->add_option("--scenes", gen.scenes, "Scenes per sample for --direct")->capture_default_str();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the translator on the train split");
  train_cmd->add_option("--corpus", tr.corpus, "Corpus file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--task", tr.task, "arrange or manip")->required();
  train_cmd->add_option("--out", tr.out, "Checkpoint to write")->required();
  train_cmd->add_option("--epochs", tr.epochs, "Epochs")->capture_default_str();
  train_cmd->add_option("--batch", tr.batch, "Batch size")->capture_default_str();
  train_cmd->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--embed", tr.embed, "Source and target embedding size")->capture_default_str();
  train_cmd->add_option("--hidden", tr.hidden, "LSTM hidden size")->capture_default_str();
  train_cmd->add_option("--head", tr.head, "Output head hidden size")->capture_default_str();

  TrainBaselineArgs tb;
  auto* tb_cmd = app.add_subcommand("train-baseline", "Train a direct-regression baseline on the train split");
  tb_cmd->add_option("--corpus", tb.corpus, "Corpus file")->required()->check(CLI::ExistingFile);
  tb_cmd->add_option("--task", tb.task, "arrange or manip")->required();
  tb_cmd->add_option("--out", tb.out, "Checkpoint to write")->required();
  tb_cmd->add_option("--scenes", tb.scenes, "Rollout scenes per training program")->capture_default_str();
  tb_cmd->add_option("--epochs", tb.epochs, "Epochs")->capture_default_str();
  tb_cmd->add_option("--batch", tb.batch, "Batch size")->capture_default_str();
  tb_cmd->add_option("--lr", tb.lr, "Adam learning rate")->capture_default_str();

  TranslateArgs tl;
  auto* tl_cmd = app.add_subcommand("translate", "Translate one instruction into a program");
  tl_cmd->add_option("--ckpt", tl.ckpt, "Translator checkpoint")->required()->check(CLI::ExistingFile);
  tl_cmd->add_option("--instruction", tl.instruction, "English instruction")->required();
  tl_cmd->add_option("--emit-attention", tl.attention, "Write the attention matrix as CSV");

  RunArgs rn;
  auto* run_cmd = app.add_subcommand("run", "Execute a program on a scene");
  run_cmd->add_option("--task", rn.task, "arrange or manip")->required();
  run_cmd->add_option("--program", rn.program, "Program file")->check(CLI::ExistingFile);
  run_cmd->add_option("--text", rn.text, "Program text");
  run_cmd->add_option("--scene", rn.scene, "Scene file (default: random scene of the referenced classes)")
      ->check(CLI::ExistingFile);

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Score a checkpoint by execution on seeded scenes");
  ev_cmd->add_option("--ckpt", ev.ckpt, "Translator or baseline checkpoint")->check(CLI::ExistingFile);
  ev_cmd->add_flag("--ground-truth", ev.ground_truth, "Score the reference programs against themselves");
  ev_cmd->add_option("--corpus", ev.corpus, "Corpus file")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--task", ev.task, "arrange or manip (checked against the checkpoint)");
  ev_cmd->add_option("--split", ev.split, "train, dev or test")->capture_default_str();
  ev_cmd->add_option("--scenes", ev.scenes, "Scenes per sample")->capture_default_str();
  ev_cmd->add_option("--threads", ev.threads, "Worker threads (0: all cores)")->capture_default_str();
  ev_cmd->add_option("--out", ev.out, "Report file (default stdout)");

  auto* gc_cmd = app.add_subcommand("grad-check", "Finite-difference check of the tiny translator");

  ReplArgs rp;
  auto* repl_cmd = app.add_subcommand("repl", "Translate instructions interactively, executing on confirmation");
  repl_cmd->add_option("--ckpt", rp.ckpt, "Translator checkpoint")->required()->check(CLI::ExistingFile);
  repl_cmd->add_option("--scene", rp.scene, "Scene file to execute on")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(kUsage, "UsageError", e.what());
  }

  std::cerr << "seed " << g.seed << '\n';
  try {
    if (*gen_cmd) return gen_corpus(gen, g);
    if (*train_cmd) return train(tr, g);
    if (*tb_cmd) return train_baseline(tb, g);
    if (*tl_cmd) return translate(tl, g);
    if (*run_cmd) return run(rn, g);
    if (*ev_cmd) return evaluate(ev, g);
    if (*gc_cmd) return grad_check(g);
    if (*repl_cmd) return repl(rp, g);
  } catch (const CliError& e) {
    return report_error(e.code, e.kind, e.message);
  } catch (const rs::Error& e) {
    int code = exit_code_for(e);
    if (e.kind() == "PreconditionViolation" && (*train_cmd || *tb_cmd)) code = kTraining;
    return report_error(code, e.kind(), e.what());
  } catch (const std::exception& e) {
    return report_error(kFailure, "InternalError", e.what());
  }
  return kUsage;
}
