#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "varlm/corpus.hpp"
#include "varlm/model.hpp"
#include "varlm/ngram.hpp"
#include "varlm/tensor.hpp"
#include "varlm/vocab.hpp"

namespace varlm {

struct TrainConfig {
  Granularity granularity = Granularity::character;
  VocabOptions vocab;
  std::size_t max_sequence_length = 50;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;
  std::size_t eval_interval = 0;  // optimizer steps between heldout evaluations; 0 = every epoch
  std::uint64_t seed = 1;
  AdamConfig adam;
  double clip_norm = 5.0;
  double metadata_dropout = 0.1;
  double init_scale = 0.08;
  Eigen::Index embed_dim = 0;  // 0 = 64 for characters, 128 for words
  Eigen::Index hidden_dim = 256;
  Eigen::Index author_dim = 16;
  Eigen::Index family_dim = 16;
  Eigen::Index kind_dim = 32;

  Eigen::Index resolved_embed_dim() const {
    if (embed_dim > 0) return embed_dim;
    return granularity == Granularity::character ? 64 : 128;
  }

  /// Throws ValidationError on out-of-range settings.
  void validate() const;
};

/// Trained conditional model plus everything needed to encode new text.
class NeuralLanguageModel final : public LanguageModel {
 public:
  NeuralLanguageModel(Vocabulary vocab, ConditioningTables tables, ModelParams<float> params,
                      TrainConfig config);

  std::size_t vocab_size() const override { return vocab_.size(); }
  double segment_log_prob(const EncodedSegment& segment) const override;
  std::vector<EncodedSegment> encode(const Document& doc, std::size_t* unknown_count = nullptr) const override;

  /// Final hidden state after reading the whole document, carrying state
  /// across its segments. nullopt for a document with no tokens.
  std::optional<VectorF> document_state(const Document& doc, std::size_t* unknown_count = nullptr) const;

  const Vocabulary& vocab() const noexcept { return vocab_; }
  const ConditioningTables& tables() const noexcept { return tables_; }
  const ModelParams<float>& params() const noexcept { return params_; }
  ModelParams<float>& params() noexcept { return params_; }
  const TrainConfig& config() const noexcept { return config_; }

 private:
  Vocabulary vocab_;
  ConditioningTables tables_;
  ModelParams<float> params_;
  TrainConfig config_;
};

/// Fresh model whose vocabulary and conditioning tables come from `train`.
NeuralLanguageModel make_model(const std::vector<Document>& train, const TrainConfig& config);

struct TrainLogEntry {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double train_loss = std::numeric_limits<double>::quiet_NaN();  // mean NLL since previous entry
  double heldout_ppl = 0.0;
  double best_so_far = 0.0;
};

struct TrainResult {
  NeuralLanguageModel model;
  std::vector<TrainLogEntry> log;
  double best_heldout_ppl = 0.0;
  std::size_t best_step = 0;
};

using TrainObserver = std::function<void(const TrainLogEntry&)>;

/// Adam over shuffled segment batches with early stopping on heldout
/// perplexity. The first log entry (step 0) evaluates the untrained model.
/// Returns the parameters of the best heldout evaluation.
TrainResult train(const std::vector<Document>& train_docs, const std::vector<Document>& heldout_docs,
                  const TrainConfig& config, const TrainObserver& observer = {});

/// Line-delimited JSON: {"step","epoch","train_loss","heldout_ppl","best_so_far"}.
void write_train_log(std::ostream& out, const std::vector<TrainLogEntry>& log);

struct DocumentState {
  VectorF state;
  std::string group;
  Kind kind = Kind::poetry;
  std::string title;
};

/// One final hidden state per document. Documents without tokens are
/// skipped and noted in `warnings`.
std::vector<DocumentState> extract_states(const NeuralLanguageModel& model,
                                          const std::vector<CorpusGroup>& groups,
                                          std::vector<std::string>* warnings = nullptr,
                                          std::size_t* unknown_count = nullptr);

// Checkpoint: a JSON manifest at `path` and a little-endian float32 blob at
// `path` with extension ".bin", tensors in ModelParams::kTensorNames order,
// each row-major.
void save_checkpoint(const NeuralLanguageModel& model, const std::filesystem::path& path);
NeuralLanguageModel load_checkpoint(const std::filesystem::path& path);

struct GradCheckConfig {
  ModelDims dims{.vocab = 12, .embed = 8, .hidden = 8, .author_dim = 4, .family_dim = 4,
                 .kind_dim = 4, .authors = 3, .families = 3, .kinds = 3};
  std::size_t sequence_length = 6;
  std::uint64_t seed = 11;
  double step = 1e-3;
  double init_scale = 0.5;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  bool passed = false;
};

/// Compares analytic gradients of the segment NLL against central finite
/// differences for every parameter, in double precision. Relative error is
/// |a - n| / max(|a|, |n|, 1e-6). `tamper` may modify the analytic gradients
/// before comparison (sensitivity tests).
GradCheckReport grad_check(const GradCheckConfig& config, double tolerance,
                           const std::function<void(ModelParams<double>&)>& tamper = {});

}  // namespace varlm
