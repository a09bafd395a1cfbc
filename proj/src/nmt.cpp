#include "roboscript/nmt.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "roboscript/corpus.hpp"

namespace roboscript::nmt {

void validate(const ModelConfig& c) {
  if (c.embed_dim < 1 || c.hidden_dim < 1 || c.head_dim < 1 || c.source_vocab < 1 || c.target_vocab < 1 ||
      c.max_decode_len < 1) {
    throw PreconditionError("model dimensions must be >= 1");
  }
  if (c.target_vocab > static_cast<int>(dsl::vocab_size())) {
    throw PreconditionError("target vocabulary exceeds the RoboScript vocabulary");
  }
  if (!(c.init_scale > 0.0) || !std::isfinite(c.init_scale)) throw PreconditionError("init_scale must be positive");
}

ModelConfig tiny_config() {
  ModelConfig c;
  c.embed_dim = 4;
  c.hidden_dim = 6;
  c.head_dim = 5;
  c.source_vocab = 7;
  c.target_vocab = 8;
  c.max_decode_len = 16;
  c.init_scale = 0.3;
  return c;
}

nn::TensorList ModelParams::tensors() {
  return {{"source_embedding", &source_embedding},
          {"encoder.W", &encoder.W},
          {"encoder.U", &encoder.U},
          {"encoder.b", &encoder.b},
          {"target_embedding", &target_embedding},
          {"decoder.W", &decoder.W},
          {"decoder.U", &decoder.U},
          {"decoder.b", &decoder.b},
          {"attention.W", &attention},
          {"fc1.W", &fc1_w},
          {"fc1.b", &fc1_b},
          {"fc2.W", &fc2_w},
          {"fc2.b", &fc2_b}};
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z;
  z.source_embedding = Mat::Zero(source_embedding.rows(), source_embedding.cols());
  z.encoder = nn::Lstm::zeros_like(encoder);
  z.target_embedding = Mat::Zero(target_embedding.rows(), target_embedding.cols());
  z.decoder = nn::Lstm::zeros_like(decoder);
  z.attention = Mat::Zero(attention.rows(), attention.cols());
  z.fc1_w = Mat::Zero(fc1_w.rows(), fc1_w.cols());
  z.fc1_b = Mat::Zero(fc1_b.rows(), 1);
  z.fc2_w = Mat::Zero(fc2_w.rows(), fc2_w.cols());
  z.fc2_b = Mat::Zero(fc2_b.rows(), 1);
  return z;
}

Model init_model(ModelConfig config, dsl::Task task, std::vector<std::string> source_words) {
  if (config.source_vocab == 0) config.source_vocab = static_cast<int>(source_words.size());
  validate(config);
  if (!source_words.empty() && static_cast<int>(source_words.size()) != config.source_vocab) {
    throw PreconditionError("source word list does not match source_vocab");
  }
  Model m;
  m.config = config;
  m.task = task;
  m.source_words = std::move(source_words);
  Rng rng(derive_seed({config.seed, 0x6e6d74}));
  const double s = config.init_scale;
  const int E = config.embed_dim, H = config.hidden_dim;
  auto& p = m.params;
  p.source_embedding = nn::uniform_matrix(E, config.source_vocab, s, rng);
  p.encoder = nn::Lstm::init(E, H, s, rng);
  p.target_embedding = nn::uniform_matrix(E, config.target_vocab + 1, s, rng);
  p.decoder = nn::Lstm::init(E, H, s, rng);
  p.attention = nn::uniform_matrix(H, H, s, rng);
  p.fc1_w = nn::uniform_matrix(config.head_dim, 2 * H, s, rng);
  p.fc1_b = Mat::Zero(config.head_dim, 1);
  p.fc2_w = nn::uniform_matrix(config.target_vocab, config.head_dim, s, rng);
  p.fc2_b = Mat::Zero(config.target_vocab, 1);
  return m;
}

std::vector<int> source_ids(const Model& model, std::string_view instruction) {
  const auto words = corpus::tokenize_instruction(instruction);
  if (words.empty()) throw dsl::LexError(0, "empty instruction");
  std::vector<int> ids;
  ids.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto it = std::lower_bound(model.source_words.begin(), model.source_words.end(), words[i]);
    if (it == model.source_words.end() || *it != words[i]) {
      throw dsl::LexError(i, "unknown word '" + words[i] + "'");
    }
    ids.push_back(static_cast<int>(it - model.source_words.begin()));
  }
  return ids;
}

namespace {

void check_source(const ModelParams& params, const std::vector<int>& source) {
  if (source.empty()) throw PreconditionError("empty source sequence");
  for (int id : source) {
    if (id < 0 || id >= params.source_embedding.cols()) {
      throw UnknownSourceToken("source id " + std::to_string(id) + " outside the vocabulary");
    }
  }
}

int argmax(const Vec& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return static_cast<int>(i);
}

int start_column(const ModelParams& p) { return static_cast<int>(p.target_embedding.cols()) - 1; }

}  // namespace

EncodedSource encode(const ModelParams& params, const std::vector<int>& source) {
  check_source(params, source);
  nn::EncoderCache cache;
  auto out = nn::encoder_forward(params.source_embedding, params.encoder, {source}, cache);
  EncodedSource e;
  e.states = std::move(out.memory.front());
  e.final.h = out.h.col(0);
  e.final.c = out.c.col(0);
  return e;
}

AttentionResult attend(const ModelParams& params, const Vec& h, const Mat& states) {
  AttentionResult r;
  r.scores = states.transpose() * (params.attention.transpose() * h);
  r.alignment = nn::softmax(r.scores);
  r.context = states * r.alignment;
  return r;
}

DecoderStep decode_step(const ModelParams& params, std::optional<int> prev, const DecoderState& state,
                        const Mat& states) {
  const int col = prev ? *prev : start_column(params);
  if (col < 0 || col > start_column(params)) throw PreconditionError("previous token outside the vocabulary");
  nn::LstmStep s;
  nn::lstm_forward(params.decoder, params.target_embedding.col(col), state.h, state.c, nullptr, s);
  DecoderStep d;
  d.h = s.h.col(0);
  d.state = {d.h, s.c.col(0)};
  auto a = attend(params, d.h, states);
  d.scores = std::move(a.scores);
  d.alignment = std::move(a.alignment);
  d.context = std::move(a.context);
  Vec k(2 * d.h.size());
  k << d.context, d.h;
  const Vec hidden = (params.fc1_w * k + params.fc1_b.col(0)).cwiseMax(0.0);
  d.logits = params.fc2_w * hidden + params.fc2_b.col(0);
  d.y = argmax(d.logits);
  return d;
}

std::vector<Example> make_examples(const Model& model, const std::vector<ParallelSample>& samples) {
  std::vector<Example> out;
  for (const auto& s : samples) {
    if (s.task != model.task) continue;
    Example e;
    e.source = source_ids(model, s.instruction);
    for (auto t : s.program) e.target.push_back(t.id);
    e.target.push_back(dsl::kEos.id);
    out.push_back(std::move(e));
  }
  return out;
}

BatchStats forward_backward(const ModelParams& p, const std::vector<const Example*>& batch, ModelParams* grad) {
  const auto B = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index H = p.decoder.hidden();
  std::vector<std::vector<int>> sources;
  std::size_t T = 0;
  for (const auto* e : batch) {
    check_source(p, e->source);
    sources.push_back(e->source);
    T = std::max(T, e->target.size());
  }
  BatchStats stats;
  for (const auto* e : batch) stats.tokens += e->target.size();
  const double inv_tokens = 1.0 / static_cast<double>(stats.tokens);

  nn::EncoderCache enc_cache;
  const auto enc = nn::encoder_forward(p.source_embedding, p.encoder, sources, enc_cache);

  struct StepCache {
    nn::LstmStep lstm;
    nn::AttentionStep att;
    Mat k, pre, hidden, dlogits;
    std::vector<int> inputs;
  };
  std::vector<StepCache> steps(grad ? T : 1);
  Mat h = enc.h, c = enc.c;
  Mat x(p.target_embedding.rows(), B);
  for (std::size_t t = 0; t < T; ++t) {
    StepCache& sc = steps[grad ? t : 0];
    sc.inputs.resize(static_cast<std::size_t>(B));
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto& tgt = batch[static_cast<std::size_t>(b)]->target;
      const int in = (t == 0 || t > tgt.size()) ? start_column(p) : tgt[t - 1];
      sc.inputs[static_cast<std::size_t>(b)] = in;
      x.col(b) = p.target_embedding.col(in);
    }
    nn::lstm_forward(p.decoder, x, h, c, nullptr, sc.lstm);
    h = sc.lstm.h;
    c = sc.lstm.c;
    nn::attention_forward(p.attention, enc.memory, h, sc.att);
    sc.k.resize(2 * H, B);
    sc.k.topRows(H) = sc.att.context;
    sc.k.bottomRows(H) = h;
    sc.pre = p.fc1_w * sc.k;
    sc.pre.colwise() += p.fc1_b.col(0);
    sc.hidden = sc.pre.cwiseMax(0.0);
    Mat logits = p.fc2_w * sc.hidden;
    logits.colwise() += p.fc2_b.col(0);
    sc.dlogits = Mat::Zero(logits.rows(), B);
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto& tgt = batch[static_cast<std::size_t>(b)]->target;
      if (t >= tgt.size()) continue;
      const Vec prob = nn::softmax(logits.col(b));
      const int y = tgt[t];
      stats.loss_sum -= std::log(std::max(prob(y), 1e-300));
      if (argmax(logits.col(b)) == y) ++stats.correct;
      sc.dlogits.col(b) = prob * inv_tokens;
      sc.dlogits(y, b) -= inv_tokens;
    }
  }
  if (!grad) return stats;

  *grad = p.zeros_like();
  std::vector<Mat> dmemory;
  for (const auto& m : enc.memory) dmemory.push_back(Mat::Zero(m.rows(), m.cols()));
  Mat dh_carry = Mat::Zero(H, B), dc_carry = Mat::Zero(H, B);
  Mat dx, dh_prev, dc_prev;
  for (std::size_t t = T; t-- > 0;) {
    const StepCache& sc = steps[t];
    grad->fc2_w.noalias() += sc.dlogits * sc.hidden.transpose();
    grad->fc2_b.col(0) += sc.dlogits.rowwise().sum();
    Mat dpre = p.fc2_w.transpose() * sc.dlogits;
    dpre.array() *= (sc.pre.array() > 0.0).cast<double>();
    grad->fc1_w.noalias() += dpre * sc.k.transpose();
    grad->fc1_b.col(0) += dpre.rowwise().sum();
    const Mat dk = p.fc1_w.transpose() * dpre;
    Mat dh = dk.bottomRows(H) + dh_carry;
    nn::attention_backward(p.attention, enc.memory, sc.att, dk.topRows(H), grad->attention, dmemory, dh);
    nn::lstm_backward(p.decoder, sc.lstm, dh, dc_carry, grad->decoder, &dx, dh_prev, dc_prev);
    for (Eigen::Index b = 0; b < B; ++b) grad->target_embedding.col(sc.inputs[static_cast<std::size_t>(b)]) += dx.col(b);
    dh_carry.swap(dh_prev);
    dc_carry.swap(dc_prev);
  }
  nn::encoder_backward(p.source_embedding, p.encoder, enc_cache, dmemory, dh_carry, dc_carry, grad->source_embedding,
                       grad->encoder);
  return stats;
}

BatchStats evaluate_examples(const ModelParams& params, const std::vector<Example>& examples, std::size_t batch_size) {
  BatchStats total;
  for (std::size_t i = 0; i < examples.size(); i += batch_size) {
    std::vector<const Example*> batch;
    for (std::size_t j = i; j < std::min(examples.size(), i + batch_size); ++j) batch.push_back(&examples[j]);
    const auto s = forward_backward(params, batch, nullptr);
    total.loss_sum += s.loss_sum;
    total.tokens += s.tokens;
    total.correct += s.correct;
  }
  return total;
}

void train_examples(Model& model, const std::vector<Example>& examples, const TrainOptions& options,
                    std::vector<EpochStats>* history) {
  if (examples.empty()) throw PreconditionError("training split is empty");
  if (options.batch_size == 0 || options.epochs < 0) throw PreconditionError("invalid training options");
  ModelParams grad = model.params.zeros_like();
  const auto params = model.params.tensors();
  const auto grads = grad.tensors();
  nn::Adam adam(params, options.learning_rate);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    Rng rng(derive_seed({model.config.seed, static_cast<std::uint64_t>(epoch), 0x7472}));
    rng.shuffle(order);
    BatchStats total;
    for (std::size_t i = 0; i < order.size(); i += options.batch_size) {
      std::vector<const Example*> batch;
      for (std::size_t j = i; j < std::min(order.size(), i + options.batch_size); ++j) {
        batch.push_back(&examples[order[j]]);
      }
      const auto s = forward_backward(model.params, batch, &grad);
      if (!std::isfinite(s.loss_sum) || !nn::all_finite(grads)) {
        throw nn::NonFiniteLoss(fmt::format("epoch {} batch {}: loss {} over {} tokens", epoch,
                                            i / options.batch_size, s.loss_sum, s.tokens));
      }
      adam.step(grads);
      total.loss_sum += s.loss_sum;
      total.tokens += s.tokens;
      total.correct += s.correct;
    }
    EpochStats es{epoch, total.loss(), total.accuracy()};
    if (history) history->push_back(es);
    if (options.on_epoch) options.on_epoch(es);
  }
}

TrainResult train(const ModelConfig& config, dsl::Task task, const std::vector<ParallelSample>& samples,
                  const TrainOptions& options) {
  TrainResult r;
  ModelConfig c = config;
  c.source_vocab = static_cast<int>(corpus::english_vocabulary().size());
  r.model = init_model(c, task, corpus::english_vocabulary());
  const auto examples = make_examples(r.model, samples);
  if (examples.empty()) throw PreconditionError("training split is empty");
  r.initial_loss = evaluate_examples(r.model.params, examples).loss();
  train_examples(r.model, examples, options, &r.epochs);
  return r;
}

Translation translate(const Model& model, std::string_view instruction) {
  Translation t;
  const auto ids = source_ids(model, instruction);
  for (int id : ids) t.source.push_back(model.source_words[static_cast<std::size_t>(id)]);
  const auto enc = encode(model.params, ids);
  DecoderState state = enc.final;
  std::optional<int> prev;
  std::vector<Vec> rows;
  t.truncated = true;
  for (int step = 0; step < model.config.max_decode_len; ++step) {
    auto d = decode_step(model.params, prev, state, enc.states);
    rows.push_back(d.alignment);
    if (d.y == dsl::kEos.id) {
      t.truncated = false;
      break;
    }
    t.tokens.push_back(dsl::Token{static_cast<std::uint8_t>(d.y)});
    prev = d.y;
    state = d.state;
  }
  t.attention.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) t.attention.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return t;
}

void write_attention_csv(std::ostream& out, const Translation& t) {
  auto quote = [](std::string_view s) {
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q += '"';
      q += ch;
    }
    return q + '"';
  };
  out << "token";
  for (const auto& w : t.source) out << ',' << quote(w);
  out << '\n';
  for (Eigen::Index i = 0; i < t.attention.rows(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    out << quote(idx < t.tokens.size() ? dsl::token_text(t.tokens[idx]) : std::string_view("<eos>"));
    for (Eigen::Index j = 0; j < t.attention.cols(); ++j) out << ',' << fmt::format("{:.6f}", t.attention(i, j));
    out << '\n';
  }
}

GradCheckResult grad_check(const ModelConfig& config, std::uint64_t seed, const std::vector<std::string>& only) {
  ModelConfig c = config;
  c.seed = seed;
  Model model = init_model(c, dsl::Task::kArrange, {});
  Rng rng(derive_seed({seed, 0x6763}));
  std::vector<Example> examples(3);
  for (auto& e : examples) {
    const auto n = 2 + rng.below(4);
    for (std::uint64_t i = 0; i < n; ++i) e.source.push_back(static_cast<int>(rng.below(c.source_vocab)));
    const auto m = 1 + rng.below(4);
    for (std::uint64_t i = 0; i < m; ++i) e.target.push_back(1 + static_cast<int>(rng.below(c.target_vocab - 1)));
    e.target.push_back(dsl::kEos.id);
  }
  std::vector<const Example*> batch;
  for (const auto& e : examples) batch.push_back(&e);

  ModelParams grad;
  forward_backward(model.params, batch, &grad);
  auto params = model.params.tensors();
  const auto grads = grad.tensors();
  auto loss = [&] { return forward_backward(model.params, batch, nullptr).loss(); };

  GradCheckResult r;
  constexpr double kStep = 1e-5;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& [name, tensor] = params[k];
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < tensor->size(); ++i) {
      double& v = tensor->data()[i];
      const double saved = v;
      v = saved + kStep;
      const double up = loss();
      v = saved - kStep;
      const double down = loss();
      v = saved;
      const double numeric = (up - down) / (2 * kStep);
      const double analytic = grads[k].second->data()[i];
      const double err =
          std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-4});
      worst = std::max(worst, err);
      ++r.entries;
    }
    r.per_tensor.emplace_back(name, worst);
    r.max_rel_error = std::max(r.max_rel_error, worst);
  }
  return r;
}

// ---------------------------------------------------------------- checkpoints

namespace {

constexpr std::string_view kMagic = "roboscript-nmt";
constexpr int kFormatVersion = 1;

}  // namespace

void save_model(std::ostream& out, const Model& model) {
  const auto& c = model.config;
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "task " << dsl::task_name(model.task) << '\n';
  out << "config embed_dim " << c.embed_dim << " hidden_dim " << c.hidden_dim << " head_dim " << c.head_dim
      << " source_vocab " << c.source_vocab << " target_vocab " << c.target_vocab << " max_decode_len "
      << c.max_decode_len << " seed " << c.seed << " init_scale " << fmt::format("{}", c.init_scale) << '\n';
  out << "words " << model.source_words.size() << '\n';
  for (const auto& w : model.source_words) out << w << '\n';
  ModelParams params = model.params;
  for (const auto& [name, t] : params.tensors()) nn::write_tensor(out, name, *t);
}

Model load_model(std::istream& in) {
  std::string magic, tag;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) throw IoError("not a translator checkpoint");
  if (version != kFormatVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  std::string task_text;
  if (!(in >> tag >> task_text) || tag != "task") throw IoError("missing task line");
  auto task = dsl::task_from_name(task_text);
  if (!task) throw IoError("unknown task '" + task_text + "'");
  ModelConfig c;
  if (!(in >> tag) || tag != "config") throw IoError("missing config line");
  std::string line;
  std::getline(in, line);
  std::istringstream fields(line);
  for (std::string key; fields >> key;) {
    std::string value;
    if (!(fields >> value)) throw IoError("config key without value: " + key);
    try {
      if (key == "embed_dim") c.embed_dim = std::stoi(value);
      else if (key == "hidden_dim") c.hidden_dim = std::stoi(value);
      else if (key == "head_dim") c.head_dim = std::stoi(value);
      else if (key == "source_vocab") c.source_vocab = std::stoi(value);
      else if (key == "target_vocab") c.target_vocab = std::stoi(value);
      else if (key == "max_decode_len") c.max_decode_len = std::stoi(value);
      else if (key == "seed") c.seed = std::stoull(value);
      else if (key == "init_scale") c.init_scale = std::stod(value);
      else throw IoError("unknown config key " + key);
    } catch (const std::logic_error&) {
      throw IoError("bad config value for " + key);
    }
  }
  try {
    validate(c);
  } catch (const PreconditionError& e) {
    throw IoError(std::string("invalid config: ") + e.what());
  }
  std::size_t n_words = 0;
  if (!(in >> tag >> n_words) || tag != "words") throw IoError("missing word list");
  if (static_cast<int>(n_words) != c.source_vocab) throw IoError("word list does not match source_vocab");
  std::vector<std::string> words(n_words);
  for (auto& w : words) {
    if (!(in >> w)) throw IoError("truncated word list");
  }
  if (!std::is_sorted(words.begin(), words.end())) throw IoError("word list must be sorted");
  Model m = init_model(c, *task, std::move(words));
  for (const auto& [name, t] : m.params.tensors()) *t = nn::read_tensor(in, name, t->rows(), t->cols());
  return m;
}

void save_model_file(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  save_model(out, model);
  if (!out) throw IoError("write failed for " + path.string());
}

Model load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return load_model(in);
}

}  // namespace roboscript::nmt
