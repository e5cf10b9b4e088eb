#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "varlm/vocab.hpp"

namespace varlm {

/// Common surface of the n-gram and neural backends.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual std::size_t vocab_size() const = 0;

  /// Natural-log likelihood of every target in the segment (positions 1..end of `tokens`).
  virtual double segment_log_prob(const EncodedSegment& segment) const = 0;

  /// Encodes a document with this model's vocabulary and conditioning tables.
  virtual std::vector<EncodedSegment> encode(const Document& doc,
                                             std::size_t* unknown_count = nullptr) const = 0;
};

/// exp(-total_log_prob / predicted_tokens). The single perplexity definition
/// both backends report. Throws ValidationError when predicted_tokens == 0.
double perplexity_from_log_prob(double total_log_prob, std::size_t predicted_tokens);

double perplexity(const LanguageModel& model, std::span<const EncodedSegment> segments);

/// Perplexity over all segments of all documents, encoded with the model's vocabulary.
double perplexity_on(const LanguageModel& model, const std::vector<Document>& docs,
                     std::size_t* unknown_count = nullptr);

struct NgramOptions {
  std::size_t order = 7;
  double alpha = 0.1;
};

/// Additively smoothed token n-gram model.
///
/// p(x | ctx) = (count(ctx, x) + alpha) / (count(ctx) + alpha * |V|), where ctx
/// is the previous order-1 tokens, padded on the left with the boundary token.
/// Contexts never seen in training get the uniform 1/|V|.
class NgramModel {
 public:
  using Context = std::u32string;

  struct ContextCounts {
    std::uint64_t total = 0;
    std::unordered_map<TokenId, std::uint64_t> next;
  };

  /// Counts every token of every sequence at index >= first_predicted.
  /// Throws ValidationError on empty data or invalid options.
  static NgramModel fit(const std::vector<std::vector<TokenId>>& sequences, std::size_t vocab_size,
                        const NgramOptions& options, std::size_t first_predicted = 0);

  /// A model with no counts: every token gets 1/|V|.
  static NgramModel uniform(std::size_t vocab_size, const NgramOptions& options);

  std::size_t order() const noexcept { return order_; }
  double alpha() const noexcept { return alpha_; }
  std::size_t vocab_size() const noexcept { return vocab_size_; }
  const std::unordered_map<Context, ContextCounts>& table() const noexcept { return table_; }

  /// Sum of all stored counts, i.e. the number of predicted training tokens.
  std::uint64_t total_count() const;
  std::uint64_t count(const Context& ctx, TokenId next) const;

  double prob(const Context& ctx, TokenId next) const;
  std::vector<double> distribution(const Context& ctx) const;

  /// Natural-log likelihood of seq[first_predicted..]. Out-of-range ids throw ValidationError.
  double log_prob(std::span<const TokenId> seq, std::size_t first_predicted = 0) const;

  /// Context preceding position i of seq, boundary-padded.
  Context context_at(std::span<const TokenId> seq, std::size_t i) const;

  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static NgramModel load(std::istream& in);
  static NgramModel load(const std::filesystem::path& path);

 private:
  std::size_t order_ = 1;
  double alpha_ = 1.0;
  std::size_t vocab_size_ = 0;
  std::unordered_map<Context, ContextCounts> table_;
};

/// n-gram backend behind the LanguageModel interface.
class NgramLanguageModel final : public LanguageModel {
 public:
  NgramLanguageModel(Vocabulary vocab, NgramModel model, std::size_t max_length = 50)
      : vocab_(std::move(vocab)), model_(std::move(model)), max_length_(max_length) {}

  /// Builds the vocabulary from `train` and fits on its segments.
  static NgramLanguageModel train(const std::vector<Document>& train, Granularity granularity,
                                  const NgramOptions& options, const VocabOptions& vocab_options = {},
                                  std::size_t max_length = 50);

  std::size_t vocab_size() const override { return vocab_.size(); }
  double segment_log_prob(const EncodedSegment& segment) const override;
  std::vector<EncodedSegment> encode(const Document& doc, std::size_t* unknown_count = nullptr) const override;

  const Vocabulary& vocab() const noexcept { return vocab_; }
  const NgramModel& model() const noexcept { return model_; }
  std::size_t max_length() const noexcept { return max_length_; }

 private:
  Vocabulary vocab_;
  NgramModel model_;
  std::size_t max_length_;
};

}  // namespace varlm
