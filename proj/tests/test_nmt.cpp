#include <doctest.h>

#include <cmath>
#include <sstream>

#include "roboscript/corpus.hpp"
#include "roboscript/nmt.hpp"

using namespace roboscript;
using namespace roboscript::nmt;

namespace {

Model small_model(std::uint64_t seed = 3) {
  ModelConfig c;
  c.embed_dim = 8;
  c.hidden_dim = 12;
  c.head_dim = 10;
  c.seed = seed;
  return init_model(c, dsl::Task::kArrange, corpus::english_vocabulary());
}

}  // namespace

TEST_CASE("encoder yields one state per source token") {
  const Model m = small_model();
  const auto ids = source_ids(m, "put the apple at the center");
  REQUIRE(ids.size() == 6);
  const auto enc = encode(m.params, ids);
  CHECK(enc.states.rows() == 12);
  CHECK(enc.states.cols() == 6);
  CHECK(enc.final.h.isApprox(enc.states.col(5)));
  CHECK(encode(small_model().params, ids).states == enc.states);
  CHECK_THROWS_AS(encode(m.params, {}), PreconditionError);
  CHECK_THROWS_AS(encode(m.params, {999}), UnknownSourceToken);
}

TEST_CASE("all-zero weights give all-zero encoder states") {
  Model m = small_model();
  for (auto& [name, t] : m.params.tensors()) t->setZero();
  const auto enc = encode(m.params, {1, 2, 3});
  CHECK(enc.states.isZero(0.0));
  CHECK(enc.final.c.isZero(0.0));
}

TEST_CASE("attention weights follow the bilinear softmax") {
  Model m = small_model();
  m.params.attention = Mat::Identity(2, 2);
  Vec h(2);
  h << 1.0, 0.0;
  Mat states(2, 2);
  states << std::log(2.0), 0.0, 0.0, 5.0;
  const auto a = attend(m.params, h, states);
  CHECK(a.alignment(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(a.alignment(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  Mat same = Mat::Ones(2, 4);
  const auto u = attend(m.params, h, same);
  for (int i = 0; i < 4; ++i) CHECK(u.alignment(i) == doctest::Approx(0.25));

  Mat peaked(2, 2);
  peaked << 100.0, 0.0, 3.0, 7.0;
  const auto p = attend(m.params, h, peaked);
  CHECK(p.context.isApprox(peaked.col(0), 1e-12));
}

TEST_CASE("decode step produces a distribution over the target vocabulary") {
  Model m = small_model();
  const auto enc = encode(m.params, source_ids(m, "topple the lock"));
  const auto d = decode_step(m.params, std::nullopt, enc.final, enc.states);
  CHECK(d.logits.size() == 96);
  CHECK(nn::softmax(d.logits).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.alignment.sum() == doctest::Approx(1.0).epsilon(1e-12));

  m.params.fc2_w.setZero();
  m.params.fc2_b.setZero();
  Example e{source_ids(m, "topple the lock"), {5, 0}};
  const auto s = forward_backward(m.params, {&e}, nullptr);
  CHECK(s.loss() == doctest::Approx(std::log(96.0)).epsilon(1e-12));
}

TEST_CASE("attention invariants over random decode steps") {
  Model m = small_model(11);
  Rng rng(5);
  const auto& vocab = corpus::english_vocabulary();
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<int> src;
    const auto n = 1 + rng.below(12);
    for (std::uint64_t i = 0; i < n; ++i) src.push_back(static_cast<int>(rng.below(vocab.size())));
    const auto enc = encode(m.params, src);
    DecoderState st{nn::uniform_matrix(12, 1, 1.0, rng).col(0), nn::uniform_matrix(12, 1, 1.0, rng).col(0)};
    const auto d = decode_step(m.params, static_cast<int>(rng.below(96)), st, enc.states);
    REQUIRE(std::abs(d.alignment.sum() - 1.0) <= 1e-6);
    double max_norm = 0.0;
    for (Eigen::Index s = 0; s < enc.states.cols(); ++s) max_norm = std::max(max_norm, enc.states.col(s).norm());
    REQUIRE(d.context.norm() <= max_norm + 1e-6);
  }
}

TEST_CASE("analytic gradients match central differences") {
  const auto full = grad_check(tiny_config(), 1);
  CAPTURE(full.max_rel_error);
  CHECK(full.max_rel_error < 1e-4);
  CHECK(full.per_tensor.size() == 13);
  CHECK(full.entries > 500);
  const auto wa = grad_check(tiny_config(), 2, {"attention.W"});
  CHECK(wa.per_tensor.size() == 1);
  CHECK(wa.max_rel_error < 1e-4);
}

TEST_CASE("a confidently correct model has vanishing gradients") {
  ModelConfig c = tiny_config();
  Model m = init_model(c, dsl::Task::kArrange, {});
  m.params.fc2_b(0, 0) = 60.0;  // always EOS
  Example e{{1, 2}, {0}};
  ModelParams grad;
  const auto s = forward_backward(m.params, {&e}, &grad);
  CHECK(s.loss() < 1e-20);
  CHECK(std::sqrt(nn::squared_norm(grad.tensors())) < 1e-20);
}

TEST_CASE("untrained loss is near ln|V|") {
  const auto samples = corpus::generate_corpus(dsl::Task::kArrange, 124, 5);
  Model m = init_model(ModelConfig{}, dsl::Task::kArrange, corpus::english_vocabulary());
  const auto loss = evaluate_examples(m.params, make_examples(m, samples)).loss();
  CHECK(loss == doctest::Approx(std::log(96.0)).epsilon(0.1));
}

TEST_CASE("training is deterministic and fits a tiny set") {
  auto samples = corpus::generate_corpus(dsl::Task::kManipulation, 146, 5);
  std::vector<ParallelSample> subset;
  for (const auto& s : samples) {
    if (s.template_family == "reach" && subset.size() < 4) subset.push_back(s);
  }
  ModelConfig c;
  c.embed_dim = 16;
  c.hidden_dim = 32;
  c.head_dim = 32;
  TrainOptions o;
  o.epochs = 600;
  o.batch_size = 4;
  o.learning_rate = 1e-2;
  const auto a = train(c, dsl::Task::kManipulation, subset, o);
  const auto b = train(c, dsl::Task::kManipulation, subset, o);
  CHECK(a.model.params.fc2_w == b.model.params.fc2_w);
  CHECK(a.model.params.encoder.U == b.model.params.encoder.U);
  CHECK(a.epochs.back().loss < a.initial_loss / 10);
  for (const auto& s : subset) {
    const auto t = translate(a.model, s.instruction);
    CHECK_FALSE(t.truncated);
    CHECK(t.tokens == s.program);
    CHECK(t.attention.rows() == static_cast<Eigen::Index>(t.tokens.size() + 1));
    for (Eigen::Index r = 0; r < t.attention.rows(); ++r) CHECK(t.attention.row(r).sum() == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(train(c, dsl::Task::kArrange, subset, o), PreconditionError);
}

TEST_CASE("decoding without EOS is truncated") {
  ModelConfig c;
  c.embed_dim = 4;
  c.hidden_dim = 4;
  c.head_dim = 4;
  c.max_decode_len = 5;
  Model m = init_model(c, dsl::Task::kArrange, corpus::english_vocabulary());
  m.params.fc2_b(0, 0) = -100.0;
  const auto t = translate(m, "put the apple at the center");
  CHECK(t.truncated);
  CHECK(t.tokens.size() == 5);
  CHECK_THROWS_AS(translate(m, "put the zebra at the center"), dsl::LexError);
  CHECK_THROWS_AS(translate(m, "   "), dsl::LexError);
}

TEST_CASE("checkpoint round trip") {
  Model m = small_model(21);
  std::stringstream ss;
  save_model(ss, m);
  const Model back = load_model(ss);
  CHECK(back.config == m.config);
  CHECK(back.source_words == m.source_words);
  CHECK(back.task == m.task);
  auto a = m.params.tensors();
  auto b = const_cast<Model&>(back).params.tensors();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i].second == *b[i].second);
  CHECK(translate(back, "put the cup in the middle").tokens == translate(m, "put the cup in the middle").tokens);

  std::istringstream bad("roboscript-nmt 9\n");
  CHECK_THROWS_AS(load_model(bad), IoError);
  std::string text = ss.str();
  text.resize(text.size() / 2);
  std::istringstream cut(text);
  CHECK_THROWS_AS(load_model(cut), IoError);
}

TEST_CASE("attention csv has one row per decode step") {
  Model m = small_model();
  m.config.max_decode_len = 3;
  const auto t = translate(m, "topple the lock");
  std::ostringstream out;
  write_attention_csv(out, t);
  const std::string csv = out.str();
  CHECK(csv.rfind("token,\"topple\",\"the\",\"lock\"\n", 0) == 0);
  CHECK(static_cast<Eigen::Index>(std::count(csv.begin(), csv.end(), '\n')) == t.attention.rows() + 1);
}
