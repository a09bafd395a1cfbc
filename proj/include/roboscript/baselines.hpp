#pragma once

// Direct-regression baselines: they map an instruction and the scene straight
// to object positions (arrange) or to end-effector poses (manipulation),
// without generating a program.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "roboscript/corpus.hpp"
#include "roboscript/dsl.hpp"
#include "roboscript/interp.hpp"
#include "roboscript/nn.hpp"
#include "roboscript/scene.hpp"

namespace roboscript::baselines {

using nn::Mat;
using nn::Vec;

inline constexpr int kArrangeFeatures = 3 * static_cast<int>(scene::kNumClasses);  // w, h, present
inline constexpr int kManipFeatures = 6 * static_cast<int>(scene::kNumClasses);    // x, y, w, h, d, present
inline constexpr int kArrangeOutputs = 2 * static_cast<int>(scene::kNumClasses);
// Trajectory row: x, y, z, r / 180, grip; the decoder input adds a start flag
// and the head adds a stop logit.
inline constexpr int kRowDim = 5;
inline constexpr int kHeadOutputs = 6;
inline constexpr std::size_t kMaxRollout = 64;
// Rollout scenes per training program in the default pipeline.
inline constexpr std::size_t kTrainingScenes = 2;

struct BaselineConfig {
  int embed_dim = 64;
  int hidden_dim = 128;
  int head_dim = 128;
  std::uint64_t seed = 1;
  double init_scale = 0.08;

  friend bool operator==(const BaselineConfig&, const BaselineConfig&) = default;
};

void validate(const BaselineConfig& config);
BaselineConfig tiny_baseline_config();

// Encoder final state and object sizes through FC-ReLU-FC-ReLU-FC.
struct ArrangeParams {
  Mat source_embedding;
  nn::Lstm encoder;
  Mat fc1_w, fc1_b;  // head x (H + kArrangeFeatures)
  Mat fc2_w, fc2_b;  // head x head
  Mat fc3_w, fc3_b;  // kArrangeOutputs x head

  nn::TensorList tensors();
  ArrangeParams zeros_like() const;
};

// Encoder-decoder with attention; each step emits one trajectory row.
struct ManipParams {
  Mat source_embedding;
  nn::Lstm encoder;
  nn::Lstm decoder;  // input kRowDim + 1
  Mat attention;     // H x H
  Mat fc1_w, fc1_b;  // head x (2H + kManipFeatures)
  Mat fc2_w, fc2_b;  // kHeadOutputs x head

  nn::TensorList tensors();
  ManipParams zeros_like() const;
};

struct Baseline {
  BaselineConfig config;
  dsl::Task task = dsl::Task::kArrange;
  std::vector<std::string> source_words;  // sorted
  ArrangeParams arrange;                  // used when task is arrange
  ManipParams manip;                      // used when task is manipulation

  nn::TensorList tensors();
};

Baseline init_baseline(const BaselineConfig& config, dsl::Task task, std::vector<std::string> source_words);

// Scene encodings in class-registry order; absent classes are all zeros.
Vec arrange_features(const scene::Scene& scene);
Vec manip_features(const scene::Scene& scene);

struct TrajectoryRow {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double r = 0.0;  // degrees
  bool grip = false;
  friend bool operator==(const TrajectoryRow&, const TrajectoryRow&) = default;
};

// One row per Move carrying the gripper state in effect at that Move. Grip
// events after the last Move have no row and are dropped.
std::vector<TrajectoryRow> trajectory_rows(const interp::Trajectory& trajectory);
// Inverse: a Grip event is inserted wherever the row's grip flag changes.
interp::Trajectory rows_to_trajectory(const std::vector<TrajectoryRow>& rows);

// ---------------------------------------------------------------- training

struct ArrangeExample {
  std::vector<int> source;
  Vec features;
  Vec target;  // kArrangeOutputs
  Vec mask;    // 1 for present-object coordinates
};

struct ManipExample {
  std::vector<int> source;
  Vec features;
  std::vector<TrajectoryRow> rows;
};

std::vector<ArrangeExample> make_arrange_examples(const Baseline& model,
                                                  const std::vector<corpus::DirectSample>& samples);
std::vector<ManipExample> make_manip_examples(const Baseline& model, const std::vector<corpus::DirectSample>& samples);

// Mean loss of one batch; `grad` (when given) is overwritten with its gradient.
// Arrange: squared error averaged over present-object coordinates.
// Manipulation: per row, mean squared pose error + grip BCE + stop BCE,
// averaged over rows.
double arrange_forward_backward(const ArrangeParams& params, const std::vector<const ArrangeExample*>& batch,
                                ArrangeParams* grad);
double manip_forward_backward(const ManipParams& params, const std::vector<const ManipExample*>& batch,
                              ManipParams* grad);

struct TrainOptions {
  int epochs = 10;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  std::function<void(int epoch, double loss)> on_epoch;
};

struct TrainResult {
  Baseline model;
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;
};

// Samples whose task differs from `task` are ignored. Throws
// PreconditionError when none remain and nn::NonFiniteLoss on divergence.
TrainResult train_baseline(const BaselineConfig& config, dsl::Task task,
                           const std::vector<corpus::DirectSample>& samples, const TrainOptions& options);
double dataset_loss(const Baseline& model, const std::vector<corpus::DirectSample>& samples);

// ---------------------------------------------------------------- inference

interp::Placement predict_arrange(const Baseline& model, std::string_view instruction, const scene::Scene& scene);
// Rolls out until the stop probability exceeds 0.5 or kMaxRollout rows.
interp::Trajectory predict_manip(const Baseline& model, std::string_view instruction, const scene::Scene& scene);
corpus::DirectTarget predict(const Baseline& model, std::string_view instruction, const scene::Scene& scene);

void save_baseline(std::ostream& out, const Baseline& model);
Baseline load_baseline(std::istream& in);
void save_baseline_file(const std::filesystem::path& path, const Baseline& model);
Baseline load_baseline_file(const std::filesystem::path& path);

}  // namespace roboscript::baselines
