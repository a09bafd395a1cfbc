#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "roboscript/dsl.hpp"
#include "roboscript/nn.hpp"
#include "roboscript/sample.hpp"

namespace roboscript::nmt {

using nn::Mat;
using nn::Vec;

struct ModelConfig {
  int embed_dim = 64;
  int hidden_dim = 128;
  int head_dim = 128;
  int source_vocab = 0;  // filled from the word list when 0
  int target_vocab = 96;
  int max_decode_len = 256;
  std::uint64_t seed = 1;
  double init_scale = 0.08;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void validate(const ModelConfig& config);
// E=4, H=6, |V|=8 configuration used for gradient checking.
ModelConfig tiny_config();

struct ModelParams {
  Mat source_embedding;  // E x Vs
  nn::Lstm encoder;
  Mat target_embedding;  // E x (Vt + 1); the last column is the start symbol
  nn::Lstm decoder;
  Mat attention;  // W_a, H x H
  Mat fc1_w, fc1_b;  // head x 2H
  Mat fc2_w, fc2_b;  // Vt x head

  nn::TensorList tensors();
  ModelParams zeros_like() const;
};

struct Model {
  ModelConfig config;
  dsl::Task task = dsl::Task::kArrange;
  std::vector<std::string> source_words;  // sorted; index = source id
  ModelParams params;
};

// Uniform(-s, s) weights, zero biases, forget-gate bias +1.
Model init_model(ModelConfig config, dsl::Task task, std::vector<std::string> source_words);

class UnknownSourceToken : public Error {
 public:
  explicit UnknownSourceToken(const std::string& m) : Error("UnknownSourceToken", m) {}
};

// Instruction -> source ids; unknown words raise dsl::LexError.
std::vector<int> source_ids(const Model& model, std::string_view instruction);

struct DecoderState {
  Vec h;
  Vec c;
};

struct EncodedSource {
  Mat states;  // H x n, column s is the encoder state after token s
  DecoderState final;
};

EncodedSource encode(const ModelParams& params, const std::vector<int>& source);

struct AttentionResult {
  Vec scores;     // h^T W_a h_s
  Vec alignment;  // softmax(scores)
  Vec context;    // sum_s alignment_s h_s
};

AttentionResult attend(const ModelParams& params, const Vec& h, const Mat& states);

struct DecoderStep {
  Vec h;
  Vec scores;
  Vec alignment;
  Vec context;
  Vec logits;
  int y = 0;  // argmax token id
  DecoderState state;
};

// prev = nullopt feeds the start symbol.
DecoderStep decode_step(const ModelParams& params, std::optional<int> prev, const DecoderState& state,
                        const Mat& states);

// ---------------------------------------------------------------- training

struct Example {
  std::vector<int> source;
  std::vector<int> target;  // ends with EOS
};

std::vector<Example> make_examples(const Model& model, const std::vector<ParallelSample>& samples);

struct BatchStats {
  double loss_sum = 0.0;  // summed token cross-entropy
  std::size_t tokens = 0;
  std::size_t correct = 0;  // teacher-forced argmax hits
  double loss() const { return tokens ? loss_sum / static_cast<double>(tokens) : 0.0; }
  double accuracy() const { return tokens ? static_cast<double>(correct) / static_cast<double>(tokens) : 0.0; }
};

// Teacher-forced pass over one batch. When `grad` is given it receives the
// gradient of the mean token loss (it is overwritten, not accumulated).
BatchStats forward_backward(const ModelParams& params, const std::vector<const Example*>& batch,
                            ModelParams* grad);
BatchStats evaluate_examples(const ModelParams& params, const std::vector<Example>& examples,
                             std::size_t batch_size = 32);

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double token_accuracy = 0.0;
};

struct TrainOptions {
  int epochs = 10;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  std::function<void(const EpochStats&)> on_epoch;
};

struct TrainResult {
  Model model;
  double initial_loss = 0.0;
  std::vector<EpochStats> epochs;
};

// Adam on the teacher-forced mean token cross-entropy; samples of other
// tasks are ignored. Throws nn::NonFiniteLoss with diagnostics.
TrainResult train(const ModelConfig& config, dsl::Task task, const std::vector<ParallelSample>& samples,
                  const TrainOptions& options);
void train_examples(Model& model, const std::vector<Example>& examples, const TrainOptions& options,
                    std::vector<EpochStats>* history);

// ---------------------------------------------------------------- inference

struct Translation {
  std::vector<std::string> source;
  std::vector<dsl::Token> tokens;  // without EOS
  Mat attention;                   // decode steps x source tokens
  bool truncated = false;          // no EOS within max_decode_len
};

Translation translate(const Model& model, std::string_view instruction);

// Rows are decode steps (labelled by the emitted token), columns source words.
void write_attention_csv(std::ostream& out, const Translation& t);

// ---------------------------------------------------------------- checks and files

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::vector<std::pair<std::string, double>> per_tensor;
  std::size_t entries = 0;
};

// Central differences (step 1e-5) against the analytic gradient on random
// examples; per-entry error |a - n| / max(|a|, |n|, 1e-4). `only` restricts
// the check to the named tensors.
GradCheckResult grad_check(const ModelConfig& config, std::uint64_t seed, const std::vector<std::string>& only = {});

void save_model(std::ostream& out, const Model& model);
Model load_model(std::istream& in);
void save_model_file(const std::filesystem::path& path, const Model& model);
Model load_model_file(const std::filesystem::path& path);

}  // namespace roboscript::nmt
