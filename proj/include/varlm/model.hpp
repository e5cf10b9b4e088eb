#pragma once

// Conditional tied-embedding LSTM language model: parameters and the
// per-segment forward/backward pass.
//
//   e_t = E[x_t]
//   h_t = LSTM(e_t, h_{t-1})
//   s_t = W [h_t; a; f; k] + b
//   o_t = E s_t
//   p_t = softmax(o_t)       predicts x_{t+1}
//
// E is used both for input lookup and for the output projection.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "varlm/tensor.hpp"
#include "varlm/vocab.hpp"

namespace varlm {

template <typename Scalar>
using ColMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

struct ModelDims {
  Eigen::Index vocab = 0;
  Eigen::Index embed = 64;
  Eigen::Index hidden = 256;
  Eigen::Index author_dim = 16;
  Eigen::Index family_dim = 16;
  Eigen::Index kind_dim = 32;
  Eigen::Index authors = 1;  // rows, including the unknown row
  Eigen::Index families = 1;
  Eigen::Index kinds = 3;

  Eigen::Index feature_dim() const { return author_dim + family_dim + kind_dim; }
  Eigen::Index context_dim() const { return hidden + feature_dim(); }

  bool operator==(const ModelDims&) const = default;
};

template <typename Scalar>
struct ModelParams {
  ModelDims dims;
  Matrix<Scalar> embedding;        // |V| x d
  LstmWeights<Scalar> lstm;        // input size d, state size h
  Matrix<Scalar> projection;       // d x (h + da + df + dk)
  Vector<Scalar> projection_bias;  // d
  Matrix<Scalar> author_table;     // authors x da
  Matrix<Scalar> family_table;     // families x df
  Matrix<Scalar> kind_table;       // kinds x dk

  static constexpr std::array<const char*, 9> kTensorNames = {
      "embedding", "lstm.input", "lstm.recurrent", "lstm.bias", "projection",
      "projection_bias", "author_table", "family_table", "kind_table"};

  static ModelParams zeros(const ModelDims& d) {
    ModelParams p;
    p.dims = d;
    p.embedding = Matrix<Scalar>::Zero(d.vocab, d.embed);
    p.lstm = LstmWeights<Scalar>::zeros(d.embed, d.hidden);
    p.projection = Matrix<Scalar>::Zero(d.embed, d.context_dim());
    p.projection_bias = Vector<Scalar>::Zero(d.embed);
    p.author_table = Matrix<Scalar>::Zero(d.authors, d.author_dim);
    p.family_table = Matrix<Scalar>::Zero(d.families, d.family_dim);
    p.kind_table = Matrix<Scalar>::Zero(d.kinds, d.kind_dim);
    return p;
  }

  /// Uniform weights in [-scale, scale]; LSTM forget bias 1, other biases 0.
  static ModelParams initialized(const ModelDims& d, double scale, Rng& rng) {
    ModelParams p = zeros(d);
    auto fill = [&](auto& m) {
      for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = static_cast<Scalar>(rng.uniform(-scale, scale));
    };
    fill(p.embedding);
    p.lstm = LstmWeights<Scalar>::initialized(d.embed, d.hidden, static_cast<Scalar>(scale), rng);
    fill(p.projection);
    fill(p.author_table);
    fill(p.family_table);
    fill(p.kind_table);
    return p;
  }

  /// All tensors in checkpoint order (kTensorNames).
  std::vector<std::span<Scalar>> tensors() {
    return {as_span(embedding),  as_span(lstm.input),      as_span(lstm.recurrent),
            as_span(lstm.bias),  as_span(projection),      as_span(projection_bias),
            as_span(author_table), as_span(family_table), as_span(kind_table)};
  }

  std::vector<std::span<const Scalar>> tensors() const {
    return {as_span(embedding),  as_span(lstm.input),      as_span(lstm.recurrent),
            as_span(lstm.bias),  as_span(projection),      as_span(projection_bias),
            as_span(author_table), as_span(family_table), as_span(kind_table)};
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors()) n += t.size();
    return n;
  }

  void set_zero() {
    for (auto& t : tensors()) std::fill(t.begin(), t.end(), Scalar(0));
  }

  bool all_finite() const {
    for (const auto& t : tensors())
      for (Scalar x : t)
        if (!std::isfinite(x)) return false;
    return true;
  }

  template <typename To>
  ModelParams<To> cast() const {
    ModelParams<To> p;
    p.dims = dims;
    p.embedding = embedding.template cast<To>();
    p.lstm = {lstm.input.template cast<To>(), lstm.recurrent.template cast<To>(),
              lstm.bias.template cast<To>()};
    p.projection = projection.template cast<To>();
    p.projection_bias = projection_bias.template cast<To>();
    p.author_table = author_table.template cast<To>();
    p.family_table = family_table.template cast<To>();
    p.kind_table = kind_table.template cast<To>();
    return p;
  }

  void check() const {
    const auto& d = dims;
    require_shape(embedding, d.vocab, d.embed, "embedding");
    require_shape(lstm.input, 4 * d.hidden, d.embed, "lstm input weights");
    lstm.check();
    require_shape(projection, d.embed, d.context_dim(), "projection");
    require_shape(projection_bias, d.embed, 1, "projection bias");
    require_shape(author_table, d.authors, d.author_dim, "author table");
    require_shape(family_table, d.families, d.family_dim, "family table");
    require_shape(kind_table, d.kinds, d.kind_dim, "kind table");
  }
};

/// Forward pass over one segment, retaining what backward() needs.
///
/// `tokens` holds inputs followed by the final target (see EncodedSegment).
/// `output_embedding`, when given, replaces E in the output projection only;
/// it exists so tests can sever the weight tying.
template <typename Scalar>
class SegmentPass {
 public:
  SegmentPass(const ModelParams<Scalar>& params, std::span<const TokenId> tokens,
              const ConditioningIds& cond, const Matrix<Scalar>* output_embedding = nullptr,
              const Vector<Scalar>* h0 = nullptr, const Vector<Scalar>* c0 = nullptr)
      : params_(params),
        out_(output_embedding ? *output_embedding : params.embedding),
        tokens_(tokens.begin(), tokens.end()),
        cond_(cond) {
    const auto& d = params.dims;
    if (tokens_.size() < 2) throw ShapeError("segment needs at least one input and one target");
    for (TokenId t : tokens_)
      if (static_cast<Eigen::Index>(t) >= d.vocab)
        throw ShapeError("token id " + std::to_string(t) + " outside vocabulary of size " +
                         std::to_string(d.vocab));
    if (cond.author >= d.authors || cond.family >= d.families || cond.kind >= d.kinds)
      throw ShapeError("conditioning id outside its embedding table");
    require_shape(out_, d.vocab, d.embed, "output embedding");

    const Eigen::Index T = length();
    h0_ = h0 ? *h0 : Vector<Scalar>::Zero(d.hidden);
    c0_ = c0 ? *c0 : Vector<Scalar>::Zero(d.hidden);
    if (h0_.size() != d.hidden || c0_.size() != d.hidden) throw ShapeError("initial state size mismatch");

    inputs_.resize(d.embed, T);
    for (Eigen::Index t = 0; t < T; ++t) inputs_.col(t) = params.embedding.row(tokens_[t]).transpose();
    const ColMatrix<Scalar> input_proj = params.lstm.input * inputs_;

    hidden_.resize(d.hidden, T);
    steps_.reserve(static_cast<std::size_t>(T));
    Vector<Scalar> proj_col;
    for (Eigen::Index t = 0; t < T; ++t) {
      proj_col = input_proj.col(t);
      const Vector<Scalar>& hp = t == 0 ? h0_ : steps_.back().h;
      const Vector<Scalar>& cp = t == 0 ? c0_ : steps_.back().c;
      steps_.push_back(lstm_step<Scalar>(inputs_.col(t), hp, cp, params.lstm, &proj_col));
      hidden_.col(t) = steps_.back().h;
    }

    features_.resize(d.feature_dim());
    features_ << params.author_table.row(cond.author).transpose(),
        params.family_table.row(cond.family).transpose(), params.kind_table.row(cond.kind).transpose();
    const Vector<Scalar> offset =
        params.projection.rightCols(d.feature_dim()) * features_ + params.projection_bias;
    states_ = params.projection.leftCols(d.hidden) * hidden_;
    states_.colwise() += offset;

    probs_ = out_ * states_;
    softmax_columns(probs_);
    log_prob_ = 0.0;
    for (Eigen::Index t = 0; t < T; ++t)
      log_prob_ += std::log(static_cast<double>(probs_(tokens_[t + 1], t)));
  }

  Eigen::Index length() const { return static_cast<Eigen::Index>(tokens_.size()) - 1; }

  /// |V| x T; column t is the distribution over the token following input t.
  const ColMatrix<Scalar>& probabilities() const { return probs_; }

  /// Sum over positions of log p(target), accumulated in double.
  double log_prob() const { return log_prob_; }

  const Vector<Scalar>& final_hidden() const { return steps_.back().h; }
  const Vector<Scalar>& final_cell() const { return steps_.back().c; }

  /// Accumulates loss_scale * d(-log_prob)/d(theta) into `grads`. Gradients of
  /// the output projection go to `output_grad` when the pass was built with a
  /// separate output embedding, otherwise into grads.embedding. Single use.
  void backward(ModelParams<Scalar>& grads, Scalar loss_scale = Scalar(1),
                Matrix<Scalar>* output_grad = nullptr) {
    if (consumed_) throw std::logic_error("backward called twice on the same forward pass");
    consumed_ = true;
    const auto& p = params_;
    const auto& d = p.dims;
    const Eigen::Index T = length();

    ColMatrix<Scalar> d_logits = probs_;
    for (Eigen::Index t = 0; t < T; ++t) d_logits(tokens_[t + 1], t) -= Scalar(1);
    d_logits *= loss_scale;

    Matrix<Scalar>& d_out = output_grad ? *output_grad : grads.embedding;
    d_out.noalias() += d_logits * states_.transpose();
    const ColMatrix<Scalar> d_states = out_.transpose() * d_logits;

    const Vector<Scalar> d_offset = d_states.rowwise().sum();
    grads.projection.leftCols(d.hidden).noalias() += d_states * hidden_.transpose();
    grads.projection.rightCols(d.feature_dim()).noalias() += d_offset * features_.transpose();
    grads.projection_bias += d_offset;

    const Vector<Scalar> d_features = p.projection.rightCols(d.feature_dim()).transpose() * d_offset;
    grads.author_table.row(cond_.author) += d_features.segment(0, d.author_dim).transpose();
    grads.family_table.row(cond_.family) += d_features.segment(d.author_dim, d.family_dim).transpose();
    grads.kind_table.row(cond_.kind) +=
        d_features.segment(d.author_dim + d.family_dim, d.kind_dim).transpose();

    const ColMatrix<Scalar> d_hidden = p.projection.leftCols(d.hidden).transpose() * d_states;
    Vector<Scalar> dh_next = Vector<Scalar>::Zero(d.hidden);
    Vector<Scalar> dc_next = Vector<Scalar>::Zero(d.hidden);
    Vector<Scalar> dh_prev(d.hidden), dc_prev(d.hidden), dh(d.hidden);
    for (Eigen::Index t = T - 1; t >= 0; --t) {
      dh = d_hidden.col(t) + dh_next;
      const Vector<Scalar>& hp = t == 0 ? h0_ : steps_[static_cast<std::size_t>(t - 1)].h;
      const Vector<Scalar>& cp = t == 0 ? c0_ : steps_[static_cast<std::size_t>(t - 1)].c;
      const Vector<Scalar> dz = lstm_step_backward<Scalar>(inputs_.col(t), hp, cp,
                                                           steps_[static_cast<std::size_t>(t)], p.lstm,
                                                           dh, dc_next, grads.lstm, dh_prev, dc_prev);
      grads.embedding.row(tokens_[static_cast<std::size_t>(t)]).noalias() +=
          (p.lstm.input.transpose() * dz).transpose();
      dh_next.swap(dh_prev);
      dc_next.swap(dc_prev);
    }
  }

 private:
  const ModelParams<Scalar>& params_;
  const Matrix<Scalar>& out_;
  std::vector<TokenId> tokens_;
  ConditioningIds cond_;
  Vector<Scalar> h0_, c0_;
  ColMatrix<Scalar> inputs_;  // d x T
  ColMatrix<Scalar> hidden_;  // h x T
  std::vector<LstmStep<Scalar>> steps_;
  Vector<Scalar> features_;   // [a; f; k]
  ColMatrix<Scalar> states_;  // d x T
  ColMatrix<Scalar> probs_;   // |V| x T
  double log_prob_ = 0.0;
  bool consumed_ = false;
};

/// Per-position next-token distributions for one segment.
template <typename Scalar>
ColMatrix<Scalar> forward(const ModelParams<Scalar>& params, std::span<const TokenId> tokens,
                          const ConditioningIds& cond) {
  return SegmentPass<Scalar>(params, tokens, cond).probabilities();
}

}  // namespace varlm
