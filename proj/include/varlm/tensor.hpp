#pragma once

// Dense numeric kernel: softmax, LSTM cell forward/backward, Adam, global-norm
// clipping. Everything is templated on the scalar so the same code runs in
// float for training and in double for gradient checking.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "varlm/errors.hpp"
#include "varlm/rng.hpp"

namespace varlm {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixF = Matrix<float>;
using VectorF = Vector<float>;

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& x, const char* what) {
  if (!x.derived().allFinite()) throw NumericError(std::string(what) + " contains non-finite values");
}

template <typename Derived>
void require_shape(const Eigen::DenseBase<Derived>& x, Eigen::Index rows, Eigen::Index cols,
                   const char* what) {
  if (x.rows() != rows || x.cols() != cols)
    throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", got " + std::to_string(x.rows()) + "x" +
                     std::to_string(x.cols()));
}

/// Numerically stable softmax of a vector (max-subtracted).
template <typename Derived>
Vector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using S = typename Derived::Scalar;
  require_finite(logits, "softmax input");
  if (logits.size() == 0) return Vector<S>();
  Vector<S> p = (logits.array() - logits.maxCoeff()).exp().matrix();
  p /= p.sum();
  return p;
}

/// Column-wise softmax of a (classes x positions) logit matrix, in place.
template <typename Scalar>
void softmax_columns(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& logits) {
  require_finite(logits, "softmax input");
  for (Eigen::Index t = 0; t < logits.cols(); ++t) {
    auto col = logits.col(t);
    col = (col.array() - col.maxCoeff()).exp().matrix();
    col /= col.sum();
  }
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

/// LSTM weights. Gate blocks of the 4h rows are ordered input, forget,
/// cell-candidate, output.
template <typename Scalar>
struct LstmWeights {
  Matrix<Scalar> input;      // 4h x d
  Matrix<Scalar> recurrent;  // 4h x h
  Vector<Scalar> bias;       // 4h

  enum Gate : Eigen::Index { kInput = 0, kForget = 1, kCandidate = 2, kOutput = 3 };

  static LstmWeights zeros(Eigen::Index input_size, Eigen::Index hidden_size) {
    return {Matrix<Scalar>::Zero(4 * hidden_size, input_size),
            Matrix<Scalar>::Zero(4 * hidden_size, hidden_size),
            Vector<Scalar>::Zero(4 * hidden_size)};
  }

  /// Weights uniform in [-scale, scale]; forget-gate biases 1, other biases 0.
  static LstmWeights initialized(Eigen::Index input_size, Eigen::Index hidden_size, Scalar scale,
                                 Rng& rng) {
    auto w = zeros(input_size, hidden_size);
    for (Eigen::Index i = 0; i < w.input.size(); ++i)
      w.input.data()[i] = static_cast<Scalar>(rng.uniform(-scale, scale));
    for (Eigen::Index i = 0; i < w.recurrent.size(); ++i)
      w.recurrent.data()[i] = static_cast<Scalar>(rng.uniform(-scale, scale));
    w.bias.segment(kForget * hidden_size, hidden_size).setOnes();
    return w;
  }

  Eigen::Index hidden_size() const { return recurrent.cols(); }
  Eigen::Index input_size() const { return input.cols(); }

  void check() const {
    const auto h = hidden_size();
    require_shape(input, 4 * h, input.cols(), "lstm input weights");
    require_shape(recurrent, 4 * h, h, "lstm recurrent weights");
    require_shape(bias, 4 * h, 1, "lstm bias");
  }
};

/// Everything one LSTM step produces; kept for the backward pass.
template <typename Scalar>
struct LstmStep {
  Vector<Scalar> gates;  // activated [i; f; g; o]
  Vector<Scalar> c;
  Vector<Scalar> h;
  Vector<Scalar> tanh_c;
};

/// One LSTM step: i, f, o = sigmoid, g = tanh, c = f*c_prev + i*g, h = o*tanh(c).
/// `input_proj`, when given, is the precomputed input-weights * x term.
template <typename Scalar>
LstmStep<Scalar> lstm_step(const Eigen::Ref<const Vector<Scalar>>& x,
                           const Eigen::Ref<const Vector<Scalar>>& h_prev,
                           const Eigen::Ref<const Vector<Scalar>>& c_prev,
                           const LstmWeights<Scalar>& w,
                           const Vector<Scalar>* input_proj = nullptr) {
  const auto h = w.hidden_size();
  if (x.size() != w.input_size() || h_prev.size() != h || c_prev.size() != h)
    throw ShapeError("lstm_step: dimension mismatch (x=" + std::to_string(x.size()) +
                     ", h_prev=" + std::to_string(h_prev.size()) + ", c_prev=" +
                     std::to_string(c_prev.size()) + ", weights d=" +
                     std::to_string(w.input_size()) + " h=" + std::to_string(h) + ")");
  LstmStep<Scalar> s;
  s.gates = w.recurrent * h_prev + w.bias;
  if (input_proj)
    s.gates += *input_proj;
  else
    s.gates.noalias() += w.input * x;
  auto a = s.gates.array();
  a.segment(0, 2 * h) = Scalar(1) / (Scalar(1) + (-a.segment(0, 2 * h)).exp());
  a.segment(2 * h, h) = a.segment(2 * h, h).tanh();
  a.segment(3 * h, h) = Scalar(1) / (Scalar(1) + (-a.segment(3 * h, h)).exp());
  s.c = (a.segment(h, h) * c_prev.array() + a.segment(0, h) * a.segment(2 * h, h)).matrix();
  s.tanh_c = s.c.array().tanh().matrix();
  s.h = (a.segment(3 * h, h) * s.tanh_c.array()).matrix();
  return s;
}

/// Backward through one step. `dh` and `dc` are the incoming gradients on
/// h_t and c_t; weight gradients are accumulated into `grads`. Returns the
/// gate pre-activation gradient; dh_prev/dc_prev receive the recurrent terms.
template <typename Scalar>
Vector<Scalar> lstm_step_backward(const Eigen::Ref<const Vector<Scalar>>& x,
                                  const Eigen::Ref<const Vector<Scalar>>& h_prev,
                                  const Eigen::Ref<const Vector<Scalar>>& c_prev,
                                  const LstmStep<Scalar>& step, const LstmWeights<Scalar>& w,
                                  const Vector<Scalar>& dh, const Vector<Scalar>& dc_in,
                                  LstmWeights<Scalar>& grads, Vector<Scalar>& dh_prev,
                                  Vector<Scalar>& dc_prev) {
  const auto h = w.hidden_size();
  const auto g = step.gates.array();
  const auto i_g = g.segment(0, h), f_g = g.segment(h, h), c_g = g.segment(2 * h, h),
             o_g = g.segment(3 * h, h);
  const auto tc = step.tanh_c.array();

  const Eigen::Array<Scalar, Eigen::Dynamic, 1> dc =
      dc_in.array() + dh.array() * o_g * (Scalar(1) - tc * tc);
  Vector<Scalar> dz(4 * h);
  dz.segment(0, h) = (dc * c_g * i_g * (Scalar(1) - i_g)).matrix();
  dz.segment(h, h) = (dc * c_prev.array() * f_g * (Scalar(1) - f_g)).matrix();
  dz.segment(2 * h, h) = (dc * i_g * (Scalar(1) - c_g * c_g)).matrix();
  dz.segment(3 * h, h) = (dh.array() * tc * o_g * (Scalar(1) - o_g)).matrix();

  grads.input.noalias() += dz * x.transpose();
  grads.recurrent.noalias() += dz * h_prev.transpose();
  grads.bias += dz;
  dh_prev.noalias() = w.recurrent.transpose() * dz;
  dc_prev = (dc * f_g).matrix();
  return dz;
}

struct AdamConfig {
  double learning_rate = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators for a fixed list of parameter tensors.
template <typename Scalar>
struct AdamState {
  AdamConfig config;
  std::size_t step = 0;
  std::vector<Vector<Scalar>> first_moment;
  std::vector<Vector<Scalar>> second_moment;

  AdamState() = default;
  AdamState(AdamConfig cfg, std::span<const std::span<Scalar>> params) : config(cfg) {
    for (const auto& p : params) {
      first_moment.push_back(Vector<Scalar>::Zero(static_cast<Eigen::Index>(p.size())));
      second_moment.push_back(Vector<Scalar>::Zero(static_cast<Eigen::Index>(p.size())));
    }
  }
};

/// One bias-corrected Adam step over all tensors.
template <typename Scalar>
void adam_update(std::span<const std::span<Scalar>> params,
                 std::span<const std::span<const Scalar>> grads, AdamState<Scalar>& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size())
    throw ShapeError("adam_update: tensor count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != grads[k].size() ||
        static_cast<Eigen::Index>(params[k].size()) != state.first_moment[k].size())
      throw ShapeError("adam_update: shape mismatch in tensor " + std::to_string(k));
  }
  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  const auto b1 = static_cast<Scalar>(c.beta1), b2 = static_cast<Scalar>(c.beta2);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Eigen::Map<Vector<Scalar>> p(params[k].data(), static_cast<Eigen::Index>(params[k].size()));
    Eigen::Map<const Vector<Scalar>> g(grads[k].data(), static_cast<Eigen::Index>(grads[k].size()));
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
    const auto lr = static_cast<Scalar>(c.learning_rate / bc1);
    const auto eps = static_cast<Scalar>(c.epsilon);
    const auto inv_bc2 = static_cast<Scalar>(1.0 / bc2);
    p.array() -= lr * m.array() / ((v.array() * inv_bc2).sqrt() + eps);
  }
}

/// Euclidean norm over all tensors together (accumulated in double).
template <typename Scalar>
double global_norm(std::span<const std::span<const Scalar>> tensors) {
  double sq = 0.0;
  for (const auto& t : tensors)
    for (Scalar x : t) sq += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(sq);
}

/// Rescales all tensors so their global norm is at most max_norm. Returns the norm before clipping.
template <typename Scalar>
double clip_global_norm(std::span<const std::span<Scalar>> tensors, double max_norm) {
  std::vector<std::span<const Scalar>> views(tensors.begin(), tensors.end());
  const double norm = global_norm<Scalar>(views);
  if (norm > max_norm && norm > 0.0) {
    const auto scale = static_cast<Scalar>(max_norm / norm);
    for (const auto& t : tensors)
      for (Scalar& x : t) x *= scale;
  }
  return norm;
}

template <typename Derived>
std::span<typename Derived::Scalar> as_span(Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

template <typename Derived>
std::span<const typename Derived::Scalar> as_span(const Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace varlm
