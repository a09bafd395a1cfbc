#include "roboscript/nn.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace roboscript::nn {

Mat uniform_matrix(Eigen::Index rows, Eigen::Index cols, double scale, Rng& rng) {
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(-scale, scale);
  }
  return m;
}

Vec softmax(const Vec& x) {
  Vec e = (x.array() - x.maxCoeff()).exp();
  return e / e.sum();
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace {

Mat sigmoid(const Mat& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

}  // namespace

Lstm Lstm::init(Eigen::Index input, Eigen::Index hidden, double scale, Rng& rng) {
  Lstm p;
  p.W = uniform_matrix(4 * hidden, input, scale, rng);
  p.U = uniform_matrix(4 * hidden, hidden, scale, rng);
  p.b = Mat::Zero(4 * hidden, 1);
  p.b.block(hidden, 0, hidden, 1).setOnes();
  return p;
}

Lstm Lstm::zeros_like(const Lstm& o) {
  Lstm p;
  p.W = Mat::Zero(o.W.rows(), o.W.cols());
  p.U = Mat::Zero(o.U.rows(), o.U.cols());
  p.b = Mat::Zero(o.b.rows(), 1);
  return p;
}

void lstm_forward(const Lstm& p, const Mat& x, const Mat& h_prev, const Mat& c_prev, const RowVec* mask,
                  LstmStep& s) {
  const Eigen::Index H = p.hidden();
  s.x = x;
  s.h_prev = h_prev;
  s.c_prev = c_prev;
  Mat z = p.W * x + p.U * h_prev;
  z.colwise() += p.b.col(0);
  s.i = sigmoid(z.topRows(H));
  s.f = sigmoid(z.middleRows(H, H));
  s.g = z.middleRows(2 * H, H).array().tanh().matrix();
  s.o = sigmoid(z.bottomRows(H));
  s.c_raw = (s.f.array() * c_prev.array() + s.i.array() * s.g.array()).matrix();
  s.tanh_c = s.c_raw.array().tanh().matrix();
  Mat h_raw = (s.o.array() * s.tanh_c.array()).matrix();
  if (mask) {
    s.mask = *mask;
    const auto keep = (1.0 - mask->array());
    s.h = (h_raw.array().rowwise() * mask->array() + h_prev.array().rowwise() * keep).matrix();
    s.c = (s.c_raw.array().rowwise() * mask->array() + c_prev.array().rowwise() * keep).matrix();
  } else {
    s.mask.resize(0);
    s.h = std::move(h_raw);
    s.c = s.c_raw;
  }
}

void lstm_backward(const Lstm& p, const LstmStep& s, const Mat& dh, const Mat& dc, Lstm& grad, Mat* dx,
                   Mat& dh_prev, Mat& dc_prev) {
  const Eigen::Index H = p.hidden();
  Mat dh_raw, dc_raw;
  if (s.mask.size() > 0) {
    const auto keep = (1.0 - s.mask.array());
    dh_raw = (dh.array().rowwise() * s.mask.array()).matrix();
    dc_raw = (dc.array().rowwise() * s.mask.array()).matrix();
    dh_prev = (dh.array().rowwise() * keep).matrix();
    dc_prev = (dc.array().rowwise() * keep).matrix();
  } else {
    dh_raw = dh;
    dc_raw = dc;
    dh_prev = Mat::Zero(dh.rows(), dh.cols());
    dc_prev = Mat::Zero(dc.rows(), dc.cols());
  }
  const auto o = s.o.array();
  const auto t = s.tanh_c.array();
  const Mat dcell = (dc_raw.array() + dh_raw.array() * o * (1.0 - t * t)).matrix();
  Mat dz(4 * H, dh.cols());
  dz.topRows(H) = (dcell.array() * s.g.array() * s.i.array() * (1.0 - s.i.array())).matrix();
  dz.middleRows(H, H) = (dcell.array() * s.c_prev.array() * s.f.array() * (1.0 - s.f.array())).matrix();
  dz.middleRows(2 * H, H) = (dcell.array() * s.i.array() * (1.0 - s.g.array().square())).matrix();
  dz.bottomRows(H) = (dh_raw.array() * t * o * (1.0 - o)).matrix();
  dc_prev.array() += dcell.array() * s.f.array();
  grad.W.noalias() += dz * s.x.transpose();
  grad.U.noalias() += dz * s.h_prev.transpose();
  grad.b.col(0) += dz.rowwise().sum();
  dh_prev.noalias() += p.U.transpose() * dz;
  if (dx) *dx = p.W.transpose() * dz;
}

void attention_forward(const Mat& wa, const std::vector<Mat>& memory, const Mat& h, AttentionStep& s) {
  const auto B = static_cast<std::size_t>(h.cols());
  s.h = h;
  s.u = wa.transpose() * h;
  s.scores.resize(B);
  s.alignment.resize(B);
  s.context.resize(h.rows(), h.cols());
  for (std::size_t b = 0; b < B; ++b) {
    const auto col = static_cast<Eigen::Index>(b);
    s.scores[b] = memory[b].transpose() * s.u.col(col);
    s.alignment[b] = softmax(s.scores[b]);
    s.context.col(col) = memory[b] * s.alignment[b];
  }
}

void attention_backward(const Mat& wa, const std::vector<Mat>& memory, const AttentionStep& s, const Mat& dcontext,
                        Mat& dwa, std::vector<Mat>& dmemory, Mat& dh) {
  const auto B = static_cast<std::size_t>(s.h.cols());
  Mat du(s.u.rows(), s.u.cols());
  for (std::size_t b = 0; b < B; ++b) {
    const auto col = static_cast<Eigen::Index>(b);
    const Vec& a = s.alignment[b];
    const Vec da = memory[b].transpose() * dcontext.col(col);
    const Vec dscore = (a.array() * (da.array() - a.dot(da))).matrix();
    dmemory[b].noalias() += dcontext.col(col) * a.transpose();
    dmemory[b].noalias() += s.u.col(col) * dscore.transpose();
    du.col(col) = memory[b] * dscore;
  }
  dwa.noalias() += s.h * du.transpose();
  dh.noalias() += wa * du;
}

EncoderOutput encoder_forward(const Mat& embedding, const Lstm& lstm, const std::vector<std::vector<int>>& ids,
                              EncoderCache& cache) {
  const auto B = static_cast<Eigen::Index>(ids.size());
  const Eigen::Index H = lstm.hidden();
  std::size_t steps = 0;
  for (const auto& seq : ids) steps = std::max(steps, seq.size());
  cache.ids = ids;
  cache.steps.assign(steps, LstmStep{});
  Mat h = Mat::Zero(H, B), c = Mat::Zero(H, B);
  Mat x(embedding.rows(), B);
  RowVec mask(B);
  for (std::size_t t = 0; t < steps; ++t) {
    bool all = true;
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto& seq = ids[static_cast<std::size_t>(b)];
      if (t < seq.size()) {
        x.col(b) = embedding.col(seq[t]);
        mask(b) = 1.0;
      } else {
        x.col(b).setZero();
        mask(b) = 0.0;
        all = false;
      }
    }
    lstm_forward(lstm, x, h, c, all ? nullptr : &mask, cache.steps[t]);
    h = cache.steps[t].h;
    c = cache.steps[t].c;
  }
  EncoderOutput out;
  out.h = std::move(h);
  out.c = std::move(c);
  out.memory.resize(ids.size());
  for (std::size_t b = 0; b < ids.size(); ++b) {
    out.memory[b].resize(H, static_cast<Eigen::Index>(ids[b].size()));
    for (std::size_t t = 0; t < ids[b].size(); ++t) {
      out.memory[b].col(static_cast<Eigen::Index>(t)) = cache.steps[t].h.col(static_cast<Eigen::Index>(b));
    }
  }
  return out;
}

void encoder_backward(const Mat&, const Lstm& lstm, const EncoderCache& cache, const std::vector<Mat>& dmemory,
                      const Mat& dh, const Mat& dc, Mat& dembedding, Lstm& dlstm) {
  Mat dh_carry = dh, dc_carry = dc;
  Mat dx, dh_prev, dc_prev;
  const auto B = cache.ids.size();
  for (std::size_t t = cache.steps.size(); t-- > 0;) {
    for (std::size_t b = 0; b < B; ++b) {
      if (t < cache.ids[b].size()) {
        dh_carry.col(static_cast<Eigen::Index>(b)) += dmemory[b].col(static_cast<Eigen::Index>(t));
      }
    }
    lstm_backward(lstm, cache.steps[t], dh_carry, dc_carry, dlstm, &dx, dh_prev, dc_prev);
    for (std::size_t b = 0; b < B; ++b) {
      if (t < cache.ids[b].size()) dembedding.col(cache.ids[b][t]) += dx.col(static_cast<Eigen::Index>(b));
    }
    dh_carry.swap(dh_prev);
    dc_carry.swap(dc_prev);
  }
}

Adam::Adam(const TensorList& params, double lr, double beta1, double beta2, double eps)
    : params_(params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& [name, p] : params_) {
    m_.push_back(Mat::Zero(p->rows(), p->cols()));
    v_.push_back(Mat::Zero(p->rows(), p->cols()));
  }
}

void Adam::step(const TensorList& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const Mat& g = *grads[k].second;
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * g;
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * g.cwiseAbs2();
    params_[k].second->array() -= lr_ * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps_);
  }
}

void zero(const TensorList& tensors) {
  for (const auto& [name, t] : tensors) t->setZero();
}

double squared_norm(const TensorList& tensors) {
  double s = 0.0;
  for (const auto& [name, t] : tensors) s += t->squaredNorm();
  return s;
}

void scale(const TensorList& tensors, double factor) {
  for (const auto& [name, t] : tensors) *t *= factor;
}

bool all_finite(const TensorList& tensors) {
  for (const auto& [name, t] : tensors) {
    if (!t->allFinite()) return false;
  }
  return true;
}

void write_tensor(std::ostream& out, const std::string& name, const Mat& m) {
  out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      if (j > 0) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

Mat read_tensor(std::istream& in, const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  std::string tag, got;
  Eigen::Index r = 0, c = 0;
  if (!(in >> tag >> got >> r >> c) || tag != "tensor") throw IoError("expected tensor header for " + name);
  if (got != name) throw IoError("expected tensor " + name + ", found " + got);
  if (r != rows || c != cols) {
    std::ostringstream msg;
    msg << "tensor " << name << " has shape " << r << "x" << c << ", expected " << rows << "x" << cols;
    throw IoError(msg.str());
  }
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      std::string tok;
      if (!(in >> tok)) throw IoError("truncated tensor " + name);
      try {
        m(i, j) = std::stod(tok);
      } catch (const std::exception&) {
        throw IoError("bad value in tensor " + name);
      }
    }
  }
  if (!m.allFinite()) throw IoError("non-finite value in tensor " + name);
  return m;
}

}  // namespace roboscript::nn
