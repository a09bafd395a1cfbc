#include "roboscript/baselines.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace roboscript::baselines {

void validate(const BaselineConfig& c) {
  if (c.embed_dim < 1 || c.hidden_dim < 1 || c.head_dim < 1) throw PreconditionError("model dimensions must be >= 1");
  if (!(c.init_scale > 0.0) || !std::isfinite(c.init_scale)) throw PreconditionError("init_scale must be positive");
}

BaselineConfig tiny_baseline_config() {
  BaselineConfig c;
  c.embed_dim = 3;
  c.hidden_dim = 4;
  c.head_dim = 5;
  c.init_scale = 0.3;
  return c;
}

nn::TensorList ArrangeParams::tensors() {
  return {{"source_embedding", &source_embedding},
          {"encoder.W", &encoder.W},
          {"encoder.U", &encoder.U},
          {"encoder.b", &encoder.b},
          {"fc1.W", &fc1_w},
          {"fc1.b", &fc1_b},
          {"fc2.W", &fc2_w},
          {"fc2.b", &fc2_b},
          {"fc3.W", &fc3_w},
          {"fc3.b", &fc3_b}};
}

nn::TensorList ManipParams::tensors() {
  return {{"source_embedding", &source_embedding},
          {"encoder.W", &encoder.W},
          {"encoder.U", &encoder.U},
          {"encoder.b", &encoder.b},
          {"decoder.W", &decoder.W},
          {"decoder.U", &decoder.U},
          {"decoder.b", &decoder.b},
          {"attention.W", &attention},
          {"fc1.W", &fc1_w},
          {"fc1.b", &fc1_b},
          {"fc2.W", &fc2_w},
          {"fc2.b", &fc2_b}};
}

namespace {

Mat zeros(const Mat& m) { return Mat::Zero(m.rows(), m.cols()); }

}  // namespace

ArrangeParams ArrangeParams::zeros_like() const {
  ArrangeParams z;
  z.source_embedding = zeros(source_embedding);
  z.encoder = nn::Lstm::zeros_like(encoder);
  z.fc1_w = zeros(fc1_w);
  z.fc1_b = zeros(fc1_b);
  z.fc2_w = zeros(fc2_w);
  z.fc2_b = zeros(fc2_b);
  z.fc3_w = zeros(fc3_w);
  z.fc3_b = zeros(fc3_b);
  return z;
}

ManipParams ManipParams::zeros_like() const {
  ManipParams z;
  z.source_embedding = zeros(source_embedding);
  z.encoder = nn::Lstm::zeros_like(encoder);
  z.decoder = nn::Lstm::zeros_like(decoder);
  z.attention = zeros(attention);
  z.fc1_w = zeros(fc1_w);
  z.fc1_b = zeros(fc1_b);
  z.fc2_w = zeros(fc2_w);
  z.fc2_b = zeros(fc2_b);
  return z;
}

nn::TensorList Baseline::tensors() { return task == dsl::Task::kArrange ? arrange.tensors() : manip.tensors(); }

Baseline init_baseline(const BaselineConfig& config, dsl::Task task, std::vector<std::string> source_words) {
  validate(config);
  if (source_words.empty()) throw PreconditionError("empty source word list");
  if (!std::is_sorted(source_words.begin(), source_words.end())) throw PreconditionError("word list must be sorted");
  Baseline m;
  m.config = config;
  m.task = task;
  m.source_words = std::move(source_words);
  Rng rng(derive_seed({config.seed, 0x626173, static_cast<std::uint64_t>(task)}));
  const double s = config.init_scale;
  const int E = config.embed_dim, H = config.hidden_dim, F = config.head_dim;
  const auto V = static_cast<Eigen::Index>(m.source_words.size());
  if (task == dsl::Task::kArrange) {
    auto& p = m.arrange;
    p.source_embedding = nn::uniform_matrix(E, V, s, rng);
    p.encoder = nn::Lstm::init(E, H, s, rng);
    p.fc1_w = nn::uniform_matrix(F, H + kArrangeFeatures, s, rng);
    p.fc1_b = Mat::Zero(F, 1);
    p.fc2_w = nn::uniform_matrix(F, F, s, rng);
    p.fc2_b = Mat::Zero(F, 1);
    p.fc3_w = nn::uniform_matrix(kArrangeOutputs, F, s, rng);
    p.fc3_b = Mat::Zero(kArrangeOutputs, 1);
  } else {
    auto& p = m.manip;
    p.source_embedding = nn::uniform_matrix(E, V, s, rng);
    p.encoder = nn::Lstm::init(E, H, s, rng);
    p.decoder = nn::Lstm::init(kRowDim + 1, H, s, rng);
    p.attention = nn::uniform_matrix(H, H, s, rng);
    p.fc1_w = nn::uniform_matrix(F, 2 * H + kManipFeatures, s, rng);
    p.fc1_b = Mat::Zero(F, 1);
    p.fc2_w = nn::uniform_matrix(kHeadOutputs, F, s, rng);
    p.fc2_b = Mat::Zero(kHeadOutputs, 1);
  }
  return m;
}

Vec arrange_features(const scene::Scene& scene) {
  Vec f = Vec::Zero(kArrangeFeatures);
  for (const auto& o : scene.objects()) {
    const auto k = static_cast<Eigen::Index>(3 * scene::class_index(o.cls));
    f(k) = o.w;
    f(k + 1) = o.h;
    f(k + 2) = 1.0;
  }
  return f;
}

Vec manip_features(const scene::Scene& scene) {
  Vec f = Vec::Zero(kManipFeatures);
  for (const auto& o : scene.objects()) {
    const auto k = static_cast<Eigen::Index>(6 * scene::class_index(o.cls));
    f(k) = o.x;
    f(k + 1) = o.y;
    f(k + 2) = o.w;
    f(k + 3) = o.h;
    f(k + 4) = o.d;
    f(k + 5) = 1.0;
  }
  return f;
}

std::vector<TrajectoryRow> trajectory_rows(const interp::Trajectory& trajectory) {
  std::vector<TrajectoryRow> rows;
  bool grip = false;
  for (const auto& e : trajectory.events) {
    if (const auto* g = std::get_if<interp::Grip>(&e)) {
      grip = g->engaged;
    } else {
      const auto& m = std::get<interp::Move>(e);
      rows.push_back({m.x, m.y, m.z, m.r, grip});
    }
  }
  return rows;
}

interp::Trajectory rows_to_trajectory(const std::vector<TrajectoryRow>& rows) {
  interp::Trajectory t;
  bool grip = false;
  for (const auto& r : rows) {
    if (r.grip != grip) {
      grip = r.grip;
      t.events.emplace_back(interp::Grip{grip});
    }
    t.events.emplace_back(interp::Move{r.x, r.y, r.z, r.r});
  }
  return t;
}

namespace {

std::vector<int> source_ids(const Baseline& model, std::string_view instruction) {
  const auto words = corpus::tokenize_instruction(instruction);
  if (words.empty()) throw dsl::LexError(0, "empty instruction");
  std::vector<int> ids;
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto it = std::lower_bound(model.source_words.begin(), model.source_words.end(), words[i]);
    if (it == model.source_words.end() || *it != words[i]) {
      throw dsl::LexError(i, "unknown word '" + words[i] + "'");
    }
    ids.push_back(static_cast<int>(it - model.source_words.begin()));
  }
  return ids;
}

// Decoder input for a row: the row itself plus a zero start flag.
Vec row_input(const TrajectoryRow& r) {
  Vec x(kRowDim + 1);
  x << r.x, r.y, r.z, r.r / 180.0, r.grip ? 1.0 : 0.0, 0.0;
  return x;
}

Vec start_input() {
  Vec x = Vec::Zero(kRowDim + 1);
  x(kRowDim) = 1.0;
  return x;
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// Binary cross-entropy with logits: returns the loss, writes d/dlogit.
double bce(double logit, double target, double& dlogit) {
  dlogit = nn::sigmoid(logit) - target;
  return softplus(logit) - target * logit;
}

Mat relu(const Mat& m) { return m.cwiseMax(0.0); }

Mat relu_mask(const Mat& pre) { return (pre.array() > 0.0).cast<double>().matrix(); }

void add_bias(Mat& m, const Mat& b) { m.colwise() += b.col(0); }

}  // namespace

std::vector<ArrangeExample> make_arrange_examples(const Baseline& model,
                                                  const std::vector<corpus::DirectSample>& samples) {
  std::vector<ArrangeExample> out;
  for (const auto& s : samples) {
    const auto* placement = std::get_if<interp::Placement>(&s.target);
    if (s.task != dsl::Task::kArrange || !placement) continue;
    ArrangeExample e;
    e.source = source_ids(model, s.instruction);
    e.features = arrange_features(s.scene);
    e.target = Vec::Zero(kArrangeOutputs);
    e.mask = Vec::Zero(kArrangeOutputs);
    for (const auto& [cls, p] : placement->positions) {
      const auto k = static_cast<Eigen::Index>(2 * scene::class_index(cls));
      e.target(k) = p.x;
      e.target(k + 1) = p.y;
      e.mask(k) = e.mask(k + 1) = 1.0;
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ManipExample> make_manip_examples(const Baseline& model, const std::vector<corpus::DirectSample>& samples) {
  std::vector<ManipExample> out;
  for (const auto& s : samples) {
    const auto* trajectory = std::get_if<interp::Trajectory>(&s.target);
    if (s.task != dsl::Task::kManipulation || !trajectory) continue;
    ManipExample e;
    e.source = source_ids(model, s.instruction);
    e.features = manip_features(s.scene);
    e.rows = trajectory_rows(*trajectory);
    if (e.rows.empty()) continue;
    out.push_back(std::move(e));
  }
  return out;
}

double arrange_forward_backward(const ArrangeParams& p, const std::vector<const ArrangeExample*>& batch,
                                ArrangeParams* grad) {
  const auto B = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index H = p.encoder.hidden();
  std::vector<std::vector<int>> sources;
  Mat feats(kArrangeFeatures, B), target(kArrangeOutputs, B), mask(kArrangeOutputs, B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto* e = batch[static_cast<std::size_t>(b)];
    sources.push_back(e->source);
    feats.col(b) = e->features;
    target.col(b) = e->target;
    mask.col(b) = e->mask;
  }
  const double count = std::max(mask.sum(), 1.0);
  nn::EncoderCache cache;
  const auto enc = nn::encoder_forward(p.source_embedding, p.encoder, sources, cache);
  Mat z0(H + kArrangeFeatures, B);
  z0.topRows(H) = enc.h;
  z0.bottomRows(kArrangeFeatures) = feats;
  Mat pre1 = p.fc1_w * z0;
  add_bias(pre1, p.fc1_b);
  const Mat a1 = relu(pre1);
  Mat pre2 = p.fc2_w * a1;
  add_bias(pre2, p.fc2_b);
  const Mat a2 = relu(pre2);
  Mat out = p.fc3_w * a2;
  add_bias(out, p.fc3_b);
  const Mat diff = (out - target).cwiseProduct(mask);
  const double loss = diff.squaredNorm() / count;
  if (!grad) return loss;

  *grad = p.zeros_like();
  const Mat dout = 2.0 * diff / count;
  grad->fc3_w.noalias() = dout * a2.transpose();
  grad->fc3_b.col(0) = dout.rowwise().sum();
  const Mat dpre2 = (p.fc3_w.transpose() * dout).cwiseProduct(relu_mask(pre2));
  grad->fc2_w.noalias() = dpre2 * a1.transpose();
  grad->fc2_b.col(0) = dpre2.rowwise().sum();
  const Mat dpre1 = (p.fc2_w.transpose() * dpre2).cwiseProduct(relu_mask(pre1));
  grad->fc1_w.noalias() = dpre1 * z0.transpose();
  grad->fc1_b.col(0) = dpre1.rowwise().sum();
  const Mat dz0 = p.fc1_w.transpose() * dpre1;
  std::vector<Mat> dmemory;
  for (const auto& m : enc.memory) dmemory.push_back(Mat::Zero(m.rows(), m.cols()));
  nn::encoder_backward(p.source_embedding, p.encoder, cache, dmemory, dz0.topRows(H), Mat::Zero(H, B),
                       grad->source_embedding, grad->encoder);
  return loss;
}

double manip_forward_backward(const ManipParams& p, const std::vector<const ManipExample*>& batch,
                              ManipParams* grad) {
  const auto B = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index H = p.decoder.hidden();
  std::vector<std::vector<int>> sources;
  Mat feats(kManipFeatures, B);
  std::size_t T = 0, n_rows = 0;
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto* e = batch[static_cast<std::size_t>(b)];
    sources.push_back(e->source);
    feats.col(b) = e->features;
    T = std::max(T, e->rows.size());
    n_rows += e->rows.size();
  }
  const double inv_rows = 1.0 / static_cast<double>(std::max<std::size_t>(n_rows, 1));
  nn::EncoderCache cache;
  const auto enc = nn::encoder_forward(p.source_embedding, p.encoder, sources, cache);

  struct StepCache {
    nn::LstmStep lstm;
    nn::AttentionStep att;
    Mat k, pre, hidden, dout;
  };
  std::vector<StepCache> steps(T);
  Mat h = enc.h, c = enc.c;
  Mat x(kRowDim + 1, B);
  nn::RowVec mask(B);
  double loss = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    StepCache& sc = steps[t];
    bool all = true;
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto& rows = batch[static_cast<std::size_t>(b)]->rows;
      const bool active = t < rows.size();
      mask(b) = active ? 1.0 : 0.0;
      all = all && active;
      x.col(b) = (t == 0 || !active) ? start_input() : row_input(rows[t - 1]);
    }
    nn::lstm_forward(p.decoder, x, h, c, all ? nullptr : &mask, sc.lstm);
    h = sc.lstm.h;
    c = sc.lstm.c;
    nn::attention_forward(p.attention, enc.memory, h, sc.att);
    sc.k.resize(2 * H + kManipFeatures, B);
    sc.k.topRows(H) = h;
    sc.k.middleRows(H, H) = sc.att.context;
    sc.k.bottomRows(kManipFeatures) = feats;
    sc.pre = p.fc1_w * sc.k;
    add_bias(sc.pre, p.fc1_b);
    sc.hidden = relu(sc.pre);
    Mat out = p.fc2_w * sc.hidden;
    add_bias(out, p.fc2_b);
    sc.dout = Mat::Zero(kHeadOutputs, B);
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto& rows = batch[static_cast<std::size_t>(b)]->rows;
      if (t >= rows.size()) continue;
      const Vec y = row_input(rows[t]);
      for (int j = 0; j < 4; ++j) {
        const double d = out(j, b) - y(j);
        loss += d * d / 4.0 * inv_rows;
        sc.dout(j, b) = d / 2.0 * inv_rows;
      }
      double dg = 0.0, ds = 0.0;
      loss += bce(out(4, b), y(4), dg) * inv_rows;
      loss += bce(out(5, b), t + 1 == rows.size() ? 1.0 : 0.0, ds) * inv_rows;
      sc.dout(4, b) = dg * inv_rows;
      sc.dout(5, b) = ds * inv_rows;
    }
  }
  if (!grad) return loss;

  *grad = p.zeros_like();
  std::vector<Mat> dmemory;
  for (const auto& m : enc.memory) dmemory.push_back(Mat::Zero(m.rows(), m.cols()));
  Mat dh_carry = Mat::Zero(H, B), dc_carry = Mat::Zero(H, B);
  Mat dx, dh_prev, dc_prev;
  for (std::size_t t = T; t-- > 0;) {
    const StepCache& sc = steps[t];
    grad->fc2_w.noalias() += sc.dout * sc.hidden.transpose();
    grad->fc2_b.col(0) += sc.dout.rowwise().sum();
    const Mat dpre = (p.fc2_w.transpose() * sc.dout).cwiseProduct(relu_mask(sc.pre));
    grad->fc1_w.noalias() += dpre * sc.k.transpose();
    grad->fc1_b.col(0) += dpre.rowwise().sum();
    const Mat dk = p.fc1_w.transpose() * dpre;
    Mat dh = dk.topRows(H) + dh_carry;
    nn::attention_backward(p.attention, enc.memory, sc.att, dk.middleRows(H, H), grad->attention, dmemory, dh);
    nn::lstm_backward(p.decoder, sc.lstm, dh, dc_carry, grad->decoder, &dx, dh_prev, dc_prev);
    dh_carry.swap(dh_prev);
    dc_carry.swap(dc_prev);
  }
  nn::encoder_backward(p.source_embedding, p.encoder, cache, dmemory, dh_carry, dc_carry, grad->source_embedding,
                       grad->encoder);
  return loss;
}

namespace {

template <typename Params, typename Example, typename Step>
void run_training(Params& params, const std::vector<Example>& examples, const TrainOptions& options,
                  std::uint64_t seed, Step step, std::vector<double>& history) {
  Params grad = params.zeros_like();
  const auto ps = params.tensors();
  const auto gs = grad.tensors();
  nn::Adam adam(ps, options.learning_rate);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    Rng rng(derive_seed({seed, static_cast<std::uint64_t>(epoch), 0x6274}));
    rng.shuffle(order);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t i = 0; i < order.size(); i += options.batch_size) {
      std::vector<const Example*> batch;
      for (std::size_t j = i; j < std::min(order.size(), i + options.batch_size); ++j) {
        batch.push_back(&examples[order[j]]);
      }
      const double loss = step(params, batch, &grad);
      if (!std::isfinite(loss) || !nn::all_finite(gs)) {
        throw nn::NonFiniteLoss(fmt::format("epoch {} batch {}: loss {}", epoch, i / options.batch_size, loss));
      }
      adam.step(gs);
      total += loss;
      ++batches;
    }
    history.push_back(total / static_cast<double>(batches));
    if (options.on_epoch) options.on_epoch(epoch, history.back());
  }
}

template <typename Params, typename Example, typename Step>
double mean_loss(const Params& params, const std::vector<Example>& examples, Step step) {
  double total = 0.0;
  std::size_t batches = 0;
  for (std::size_t i = 0; i < examples.size(); i += 32) {
    std::vector<const Example*> batch;
    for (std::size_t j = i; j < std::min(examples.size(), i + 32); ++j) batch.push_back(&examples[j]);
    total += step(params, batch, nullptr);
    ++batches;
  }
  return batches ? total / static_cast<double>(batches) : 0.0;
}

}  // namespace

TrainResult train_baseline(const BaselineConfig& config, dsl::Task task,
                           const std::vector<corpus::DirectSample>& samples, const TrainOptions& options) {
  if (options.batch_size == 0 || options.epochs < 0) throw PreconditionError("invalid training options");
  TrainResult r;
  r.model = init_baseline(config, task, corpus::english_vocabulary());
  if (task == dsl::Task::kArrange) {
    const auto examples = make_arrange_examples(r.model, samples);
    if (examples.empty()) throw PreconditionError("no arrange samples to train on");
    r.initial_loss = mean_loss(r.model.arrange, examples, arrange_forward_backward);
    run_training(r.model.arrange, examples, options, config.seed, arrange_forward_backward, r.epoch_loss);
  } else {
    const auto examples = make_manip_examples(r.model, samples);
    if (examples.empty()) throw PreconditionError("no manipulation samples to train on");
    r.initial_loss = mean_loss(r.model.manip, examples, manip_forward_backward);
    run_training(r.model.manip, examples, options, config.seed, manip_forward_backward, r.epoch_loss);
  }
  return r;
}

double dataset_loss(const Baseline& model, const std::vector<corpus::DirectSample>& samples) {
  if (model.task == dsl::Task::kArrange) {
    return mean_loss(model.arrange, make_arrange_examples(model, samples), arrange_forward_backward);
  }
  return mean_loss(model.manip, make_manip_examples(model, samples), manip_forward_backward);
}

interp::Placement predict_arrange(const Baseline& model, std::string_view instruction, const scene::Scene& scene) {
  if (model.task != dsl::Task::kArrange) throw PreconditionError("not an arrange baseline");
  const auto& p = model.arrange;
  nn::EncoderCache cache;
  const auto enc = nn::encoder_forward(p.source_embedding, p.encoder, {source_ids(model, instruction)}, cache);
  Vec z0(enc.h.rows() + kArrangeFeatures);
  z0 << enc.h.col(0), arrange_features(scene);
  const Vec a1 = (p.fc1_w * z0 + p.fc1_b.col(0)).cwiseMax(0.0);
  const Vec a2 = (p.fc2_w * a1 + p.fc2_b.col(0)).cwiseMax(0.0);
  const Vec out = p.fc3_w * a2 + p.fc3_b.col(0);
  interp::Placement placement;
  for (const auto& o : scene.objects()) {
    const auto k = static_cast<Eigen::Index>(2 * scene::class_index(o.cls));
    placement.positions[o.cls] = {out(k), out(k + 1)};
  }
  return placement;
}

interp::Trajectory predict_manip(const Baseline& model, std::string_view instruction, const scene::Scene& scene) {
  if (model.task != dsl::Task::kManipulation) throw PreconditionError("not a manipulation baseline");
  const auto& p = model.manip;
  nn::EncoderCache cache;
  const auto enc = nn::encoder_forward(p.source_embedding, p.encoder, {source_ids(model, instruction)}, cache);
  const Vec feats = manip_features(scene);
  const Eigen::Index H = p.decoder.hidden();
  Mat h = enc.h, c = enc.c;
  Vec x = start_input();
  std::vector<TrajectoryRow> rows;
  while (rows.size() < kMaxRollout) {
    nn::LstmStep s;
    nn::lstm_forward(p.decoder, x, h, c, nullptr, s);
    h = s.h;
    c = s.c;
    nn::AttentionStep att;
    nn::attention_forward(p.attention, enc.memory, h, att);
    Vec k(2 * H + kManipFeatures);
    k << h.col(0), att.context.col(0), feats;
    const Vec hidden = (p.fc1_w * k + p.fc1_b.col(0)).cwiseMax(0.0);
    const Vec out = p.fc2_w * hidden + p.fc2_b.col(0);
    TrajectoryRow row{out(0), out(1), out(2), out(3) * 180.0, nn::sigmoid(out(4)) > 0.5};
    rows.push_back(row);
    if (nn::sigmoid(out(5)) > 0.5) break;
    x = row_input(row);
  }
  return rows_to_trajectory(rows);
}

corpus::DirectTarget predict(const Baseline& model, std::string_view instruction, const scene::Scene& scene) {
  if (model.task == dsl::Task::kArrange) return predict_arrange(model, instruction, scene);
  return predict_manip(model, instruction, scene);
}

// ---------------------------------------------------------------- checkpoints

namespace {

constexpr std::string_view kMagic = "roboscript-baseline";
constexpr int kFormatVersion = 1;

}  // namespace

void save_baseline(std::ostream& out, const Baseline& model) {
  const auto& c = model.config;
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "task " << dsl::task_name(model.task) << '\n';
  out << "config embed_dim " << c.embed_dim << " hidden_dim " << c.hidden_dim << " head_dim " << c.head_dim
      << " seed " << c.seed << " init_scale " << fmt::format("{}", c.init_scale) << '\n';
  out << "words " << model.source_words.size() << '\n';
  for (const auto& w : model.source_words) out << w << '\n';
  Baseline copy = model;
  for (const auto& [name, t] : copy.tensors()) nn::write_tensor(out, name, *t);
}

Baseline load_baseline(std::istream& in) {
  std::string magic, tag;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) throw IoError("not a baseline checkpoint");
  if (version != kFormatVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  std::string task_text;
  if (!(in >> tag >> task_text) || tag != "task") throw IoError("missing task line");
  const auto task = dsl::task_from_name(task_text);
  if (!task) throw IoError("unknown task '" + task_text + "'");
  if (!(in >> tag) || tag != "config") throw IoError("missing config line");
  BaselineConfig c;
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
      else if (key == "seed") c.seed = std::stoull(value);
      else if (key == "init_scale") c.init_scale = std::stod(value);
      else throw IoError("unknown config key " + key);
    } catch (const std::logic_error&) {
      throw IoError("bad config value for " + key);
    }
  }
  std::size_t n_words = 0;
  if (!(in >> tag >> n_words) || tag != "words" || n_words == 0) throw IoError("missing word list");
  std::vector<std::string> words(n_words);
  for (auto& w : words) {
    if (!(in >> w)) throw IoError("truncated word list");
  }
  Baseline m;
  try {
    m = init_baseline(c, *task, std::move(words));
  } catch (const PreconditionError& e) {
    throw IoError(std::string("invalid checkpoint header: ") + e.what());
  }
  for (const auto& [name, t] : m.tensors()) *t = nn::read_tensor(in, name, t->rows(), t->cols());
  return m;
}

void save_baseline_file(const std::filesystem::path& path, const Baseline& model) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  save_baseline(out, model);
  if (!out) throw IoError("write failed for " + path.string());
}

Baseline load_baseline_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return load_baseline(in);
}

}  // namespace roboscript::baselines
