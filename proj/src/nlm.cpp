#include "varlm/nlm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "varlm/errors.hpp"

namespace varlm {

void TrainConfig::validate() const {
  if (max_sequence_length < 2) throw ValidationError("max sequence length must be >= 2");
  if (patience < 1) throw ValidationError("patience must be >= 1");
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  if (max_epochs < 1) throw ValidationError("max epochs must be >= 1");
  if (!(metadata_dropout >= 0.0 && metadata_dropout <= 1.0))
    throw ValidationError("metadata dropout must lie in [0, 1]");
  if (!(adam.learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
  if (!(clip_norm > 0.0)) throw ValidationError("clip norm must be > 0");
  if (hidden_dim < 1 || author_dim < 1 || family_dim < 1 || kind_dim < 1 || embed_dim < 0)
    throw ValidationError("model dimensions must be positive");
}

NeuralLanguageModel::NeuralLanguageModel(Vocabulary vocab, ConditioningTables tables,
                                         ModelParams<float> params, TrainConfig config)
    : vocab_(std::move(vocab)), tables_(std::move(tables)), params_(std::move(params)),
      config_(std::move(config)) {
  params_.check();
  if (static_cast<std::size_t>(params_.dims.vocab) != vocab_.size())
    throw ShapeError("embedding rows do not match vocabulary size");
  if (static_cast<std::size_t>(params_.dims.authors) != tables_.author_rows() ||
      static_cast<std::size_t>(params_.dims.families) != tables_.family_rows())
    throw ShapeError("conditioning tables do not match embedding tables");
}

double NeuralLanguageModel::segment_log_prob(const EncodedSegment& segment) const {
  return SegmentPass<float>(params_, segment.tokens, segment.cond).log_prob();
}

std::vector<EncodedSegment> NeuralLanguageModel::encode(const Document& doc, std::size_t* unknown_count) const {
  return encode_document(doc, vocab_, tables_, config_.max_sequence_length, unknown_count);
}

std::optional<VectorF> NeuralLanguageModel::document_state(const Document& doc,
                                                           std::size_t* unknown_count) const {
  const auto segments = encode(doc, unknown_count);
  if (segments.empty()) return std::nullopt;
  VectorF h = VectorF::Zero(params_.dims.hidden);
  VectorF c = VectorF::Zero(params_.dims.hidden);
  for (const auto& s : segments) {
    SegmentPass<float> pass(params_, s.tokens, s.cond, nullptr, &h, &c);
    h = pass.final_hidden();
    c = pass.final_cell();
  }
  return h;
}

NeuralLanguageModel make_model(const std::vector<Document>& train, const TrainConfig& config) {
  config.validate();
  if (train.empty()) throw ValidationError("training split is empty");
  auto vocab = Vocabulary::build(train, config.granularity, config.vocab);
  auto tables = ConditioningTables::build(train);
  ModelDims dims;
  dims.vocab = static_cast<Eigen::Index>(vocab.size());
  dims.embed = config.resolved_embed_dim();
  dims.hidden = config.hidden_dim;
  dims.author_dim = config.author_dim;
  dims.family_dim = config.family_dim;
  dims.kind_dim = config.kind_dim;
  dims.authors = static_cast<Eigen::Index>(tables.author_rows());
  dims.families = static_cast<Eigen::Index>(tables.family_rows());
  dims.kinds = static_cast<Eigen::Index>(ConditioningTables::kKinds);
  Rng rng(mix_seed(config.seed));
  auto params = ModelParams<float>::initialized(dims, config.init_scale, rng);
  return NeuralLanguageModel(std::move(vocab), std::move(tables), std::move(params), config);
}

namespace {

std::vector<EncodedSegment> encode_all(const NeuralLanguageModel& model, const std::vector<Document>& docs) {
  std::vector<EncodedSegment> out;
  for (const auto& d : docs) {
    auto s = model.encode(d);
    out.insert(out.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  }
  return out;
}

}  // namespace

TrainResult train(const std::vector<Document>& train_docs, const std::vector<Document>& heldout_docs,
                  const TrainConfig& config, const TrainObserver& observer) {
  if (train_docs.empty()) throw ValidationError("training split is empty");
  if (heldout_docs.empty()) throw ValidationError("heldout split is empty");

  NeuralLanguageModel model = make_model(train_docs, config);
  const auto train_segments = encode_all(model, train_docs);
  const auto heldout_segments = encode_all(model, heldout_docs);

  auto& params = model.params();
  auto grads = ModelParams<float>::zeros(params.dims);
  const auto param_views = params.tensors();
  const auto grad_views = grads.tensors();
  std::vector<std::span<const float>> grad_const(grad_views.begin(), grad_views.end());
  AdamState<float> adam(config.adam, param_views);
  Rng rng(mix_seed(config.seed ^ 0xA5A5A5A5DEADBEEFULL));

  std::vector<TrainLogEntry> log;
  ModelParams<float> best_params = params;
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_step = 0, bad_evals = 0, step = 0, epoch = 0;
  double loss_sum = 0.0;
  std::size_t loss_tokens = 0;

  auto evaluate = [&]() {
    TrainLogEntry e;
    e.step = step;
    e.epoch = epoch;
    if (loss_tokens > 0) e.train_loss = loss_sum / static_cast<double>(loss_tokens);
    e.heldout_ppl = perplexity(model, heldout_segments);
    if (!std::isfinite(e.heldout_ppl))
      throw NumericError("heldout perplexity is not finite at step " + std::to_string(step));
    if (e.heldout_ppl < best) {
      best = e.heldout_ppl;
      best_params = params;
      best_step = step;
      bad_evals = 0;
    } else if (step > 0) {
      ++bad_evals;
    }
    e.best_so_far = best;
    loss_sum = 0.0;
    loss_tokens = 0;
    log.push_back(e);
    if (observer) observer(e);
  };

  evaluate();
  std::vector<std::size_t> order(train_segments.size());
  bool stop = false;
  bool evaluated_last = true;
  for (epoch = 1; epoch <= config.max_epochs && !stop; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size() && !stop; start += config.batch_size) {
      const std::size_t end = std::min(start + config.batch_size, order.size());
      std::size_t batch_tokens = 0;
      for (std::size_t k = start; k < end; ++k) batch_tokens += train_segments[order[k]].length();

      grads.set_zero();
      double batch_nll = 0.0;
      const float scale = 1.0f / static_cast<float>(batch_tokens);
      for (std::size_t k = start; k < end; ++k) {
        const auto& seg = train_segments[order[k]];
        ConditioningIds cond = seg.cond;
        if (rng.bernoulli(config.metadata_dropout)) cond.author = 0;
        if (rng.bernoulli(config.metadata_dropout)) cond.family = 0;
        SegmentPass<float> pass(params, seg.tokens, cond);
        batch_nll -= pass.log_prob();
        pass.backward(grads, scale);
      }
      if (!std::isfinite(batch_nll))
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(step + 1));
      clip_global_norm<float>(grad_views, config.clip_norm);
      adam_update<float>(param_views, grad_const, adam);
      ++step;
      loss_sum += batch_nll;
      loss_tokens += batch_tokens;
      evaluated_last = false;
      if (config.eval_interval > 0 && step % config.eval_interval == 0) {
        evaluate();
        evaluated_last = true;
        stop = bad_evals >= config.patience;
      }
    }
    if (config.eval_interval == 0) {
      evaluate();
      evaluated_last = true;
      stop = bad_evals >= config.patience;
    }
  }
  if (!evaluated_last) {
    --epoch;
    evaluate();
  }

  params = best_params;
  return TrainResult{std::move(model), std::move(log), best, best_step};
}

void write_train_log(std::ostream& out, const std::vector<TrainLogEntry>& log) {
  for (const auto& e : log) {
    nlohmann::ordered_json j;
    j["step"] = e.step;
    j["epoch"] = e.epoch;
    if (std::isfinite(e.train_loss))
      j["train_loss"] = e.train_loss;
    else
      j["train_loss"] = nullptr;
    j["heldout_ppl"] = e.heldout_ppl;
    j["best_so_far"] = e.best_so_far;
    out << j.dump() << '\n';
  }
}

std::vector<DocumentState> extract_states(const NeuralLanguageModel& model,
                                          const std::vector<CorpusGroup>& groups,
                                          std::vector<std::string>* warnings,
                                          std::size_t* unknown_count) {
  std::vector<DocumentState> out;
  for (const auto& g : groups) {
    for (const auto& d : g.documents) {
      auto h = model.document_state(d, unknown_count);
      if (!h) {
        if (warnings) warnings->push_back("document '" + d.title + "' has no tokens; skipped");
        continue;
      }
      out.push_back({std::move(*h), g.name, d.kind, d.title});
    }
  }
  return out;
}

GradCheckReport grad_check(const GradCheckConfig& config, double tolerance,
                           const std::function<void(ModelParams<double>&)>& tamper) {
  const auto& dims = config.dims;
  Rng rng(mix_seed(config.seed));
  auto params = ModelParams<double>::initialized(dims, config.init_scale, rng);
  std::vector<TokenId> tokens(config.sequence_length + 1);
  for (auto& t : tokens) t = static_cast<TokenId>(rng.below(static_cast<std::uint64_t>(dims.vocab)));
  ConditioningIds cond{static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(dims.authors))),
                       static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(dims.families))),
                       static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(dims.kinds)))};

  auto grads = ModelParams<double>::zeros(dims);
  SegmentPass<double>(params, tokens, cond).backward(grads);
  if (tamper) tamper(grads);

  auto loss = [&]() { return -SegmentPass<double>(params, tokens, cond).log_prob(); };

  GradCheckReport report;
  auto views = params.tensors();
  const auto gviews = grads.tensors();
  for (std::size_t k = 0; k < views.size(); ++k) {
    for (std::size_t i = 0; i < views[k].size(); ++i) {
      double& x = views[k][i];
      const double saved = x;
      x = saved + config.step;
      const double up = loss();
      x = saved - config.step;
      const double down = loss();
      x = saved;
      const double numeric = (up - down) / (2.0 * config.step);
      const double analytic = gviews[k][i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.checked;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_tensor = ModelParams<double>::kTensorNames[k];
        report.worst_index = i;
      }
    }
  }
  report.passed = report.max_relative_error < tolerance;
  return report;
}

}  // namespace varlm
