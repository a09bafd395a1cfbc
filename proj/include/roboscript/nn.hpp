#pragma once

// Dense building blocks shared by the translator and the regression
// baselines. Batches are column-major: one column per sequence.

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "roboscript/error.hpp"
#include "roboscript/rng.hpp"

namespace roboscript::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;

class NonFiniteLoss : public Error {
 public:
  explicit NonFiniteLoss(const std::string& m) : Error("NonFiniteLoss", m) {}
};

Mat uniform_matrix(Eigen::Index rows, Eigen::Index cols, double scale, Rng& rng);
Vec softmax(const Vec& x);
double sigmoid(double x);

// Single-layer LSTM, gate blocks ordered i, f, g, o.
struct Lstm {
  Mat W;  // 4H x input
  Mat U;  // 4H x H
  Mat b;  // 4H x 1

  Eigen::Index hidden() const { return U.cols(); }
  Eigen::Index input() const { return W.cols(); }
  static Lstm init(Eigen::Index input, Eigen::Index hidden, double scale, Rng& rng);  // forget bias +1
  static Lstm zeros_like(const Lstm& o);
};

struct LstmStep {
  Mat x, h_prev, c_prev;
  Mat i, f, g, o, c_raw, tanh_c;
  Mat h, c;     // outputs; equal to the previous state where mask is 0
  RowVec mask;  // empty: every column active
};

void lstm_forward(const Lstm& p, const Mat& x, const Mat& h_prev, const Mat& c_prev, const RowVec* mask,
                  LstmStep& s);
// Accumulates parameter gradients into `grad`. dx may be null.
void lstm_backward(const Lstm& p, const LstmStep& s, const Mat& dh, const Mat& dc, Lstm& grad, Mat* dx,
                   Mat& dh_prev, Mat& dc_prev);

// General (bilinear) attention: score_s = h^T Wa m_s, alignment = softmax,
// context = sum_s alignment_s m_s. memory[b] is H x len_b.
struct AttentionStep {
  Mat h;  // H x B
  Mat u;  // Wa^T h
  std::vector<Vec> scores;
  std::vector<Vec> alignment;
  Mat context;  // H x B
};

void attention_forward(const Mat& wa, const std::vector<Mat>& memory, const Mat& h, AttentionStep& s);
void attention_backward(const Mat& wa, const std::vector<Mat>& memory, const AttentionStep& s, const Mat& dcontext,
                        Mat& dwa, std::vector<Mat>& dmemory, Mat& dh);

// Masked batch encoder: embeddings + LSTM over right-padded id sequences.
struct EncoderCache {
  std::vector<std::vector<int>> ids;  // per column
  std::vector<LstmStep> steps;
};

struct EncoderOutput {
  std::vector<Mat> memory;  // per column, H x len
  Mat h, c;                 // final state per column
};

EncoderOutput encoder_forward(const Mat& embedding, const Lstm& lstm, const std::vector<std::vector<int>>& ids,
                              EncoderCache& cache);
void encoder_backward(const Mat& embedding, const Lstm& lstm, const EncoderCache& cache,
                      const std::vector<Mat>& dmemory, const Mat& dh, const Mat& dc, Mat& dembedding, Lstm& dlstm);

using TensorList = std::vector<std::pair<std::string, Mat*>>;

class Adam {
 public:
  Adam(const TensorList& params, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(const TensorList& grads);

 private:
  TensorList params_;
  std::vector<Mat> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

void zero(const TensorList& tensors);
double squared_norm(const TensorList& tensors);
void scale(const TensorList& tensors, double factor);
bool all_finite(const TensorList& tensors);

// `tensor <name> <rows> <cols>` followed by one row per line at full precision.
void write_tensor(std::ostream& out, const std::string& name, const Mat& m);
Mat read_tensor(std::istream& in, const std::string& name, Eigen::Index rows, Eigen::Index cols);

}  // namespace roboscript::nn
