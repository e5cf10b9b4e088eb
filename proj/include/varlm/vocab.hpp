#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "varlm/corpus.hpp"

namespace varlm {

using TokenId = std::uint32_t;

enum class Granularity : std::uint8_t { character, word };

std::string_view to_string(Granularity g) noexcept;
std::optional<Granularity> parse_granularity(std::string_view s) noexcept;

struct VocabOptions {
  std::size_t min_count = 1;
  std::size_t max_size = 0;  // regular tokens kept (top-K); 0 = unlimited
};

/// Token <-> id bijection with fixed special ids.
///
/// Ids 0..4 are reserved: sequence boundary, unknown token, whitespace run,
/// end of verse (<EOL>), end of stanza/paragraph (<EOS>). Regular tokens
/// follow in decreasing frequency, ties broken lexicographically.
class Vocabulary {
 public:
  static constexpr TokenId kBoundary = 0;
  static constexpr TokenId kUnknown = 1;
  static constexpr TokenId kSpace = 2;
  static constexpr TokenId kEndOfVerse = 3;
  static constexpr TokenId kEndOfStanza = 4;
  static constexpr std::size_t kNumSpecials = 5;

  Vocabulary() : Vocabulary(Granularity::character, {}) {}

  /// Rebuilds a vocabulary from its regular tokens in id order (specials excluded).
  Vocabulary(Granularity granularity, std::vector<std::string> regular_tokens);

  /// Throws ValidationError when the documents contain no tokens at all.
  static Vocabulary build(const std::vector<Document>& docs, Granularity granularity,
                          const VocabOptions& options = {});

  Granularity granularity() const noexcept { return granularity_; }
  std::size_t size() const noexcept { return tokens_.size(); }

  /// Id of a token, kUnknown when absent.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(id); }

  /// All tokens by id, specials included under their display names.
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::vector<std::string> regular_tokens() const;

  /// Maps marked-up text to ids. Tags map to their specials, whitespace runs
  /// to kSpace (character mode only), anything unseen to kUnknown.
  std::vector<TokenId> encode(std::string_view marked_text, std::size_t* unknown_count = nullptr) const;

 private:
  Granularity granularity_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// A lexical unit of marked-up text before id assignment.
struct Lexeme {
  enum class Type : std::uint8_t { token, space, end_of_verse, end_of_stanza } type;
  std::string text;
};

/// Splits marked-up text into lexemes. Character mode yields one lexeme per
/// UTF-8 code point; word mode yields punctuation-stripped words and no spaces.
std::vector<Lexeme> lex(std::string_view marked_text, Granularity granularity);

/// Metadata ids fed to the conditional model. Index 0 of every table is "unknown".
struct ConditioningIds {
  std::uint32_t author = 0;
  std::uint32_t family = 0;
  std::uint32_t kind = 0;  // 0 unknown, 1 poetry, 2 prose

  bool operator==(const ConditioningIds&) const = default;
};

/// Author and family key lists observed in training; everything else maps to 0.
class ConditioningTables {
 public:
  static constexpr std::size_t kKinds = 3;

  ConditioningTables() = default;
  ConditioningTables(std::vector<std::string> authors, std::vector<std::string> families);
  static ConditioningTables build(const std::vector<Document>& docs);

  ConditioningIds ids(const Document& doc) const;
  std::size_t author_rows() const noexcept { return authors_.size() + 1; }
  std::size_t family_rows() const noexcept { return families_.size() + 1; }
  const std::vector<std::string>& authors() const noexcept { return authors_; }
  const std::vector<std::string>& families() const noexcept { return families_; }

  static std::uint32_t kind_id(Kind kind) noexcept { return kind == Kind::poetry ? 1 : 2; }

 private:
  std::vector<std::string> authors_;
  std::vector<std::string> families_;
  std::unordered_map<std::string, std::uint32_t> author_index_;
  std::unordered_map<std::string, std::uint32_t> family_index_;
};

/// A training/evaluation unit. `tokens` holds the inputs followed by the
/// successor of the last input, so tokens[t + 1] is the target at position t.
struct EncodedSegment {
  std::vector<TokenId> tokens;
  ConditioningIds cond;

  std::size_t length() const noexcept { return tokens.empty() ? 0 : tokens.size() - 1; }
};

/// Splits a document's token stream into consecutive non-overlapping segments
/// of at most max_length inputs. The stream ends with the boundary token,
/// which the last segment's final position predicts.
std::vector<EncodedSegment> segment_tokens(const std::vector<TokenId>& stream,
                                           const ConditioningIds& cond, std::size_t max_length);

std::vector<EncodedSegment> encode_document(const Document& doc, const Vocabulary& vocab,
                                            const ConditioningTables& tables,
                                            std::size_t max_length,
                                            std::size_t* unknown_count = nullptr);

}  // namespace varlm
