#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "varlm/corpus.hpp"

namespace varlm {

/// Whitespace split, then leading/trailing punctuation stripped from each
/// token. Case is kept; tokens left empty are dropped. Expects stripped text.
std::vector<std::string> tokenize_words(std::string_view text);

struct WordStats {
  std::size_t total_occurrences = 0;
  std::size_t unique_words = 0;
  double avg_occurrences_per_word = 0.0;  // total / unique, 0 when unique == 0
};

/// Average occurrences per word from raw totals.
double average_occurrences(std::size_t total, std::size_t unique) noexcept;

WordStats word_stats(const std::vector<Document>& docs);

struct FamilyRow {
  std::string family;
  std::size_t texts = 0;
  std::size_t poetry_texts = 0;
  std::size_t prose_texts = 0;
  std::size_t word_occurrences = 0;
  std::size_t prose_word_occurrences = 0;
};

using FamilyBreakdown = std::vector<FamilyRow>;

/// One row per family present, ordered by family name.
FamilyBreakdown family_breakdown(const Corpus& corpus);

struct LengthRow {
  std::string family;
  Kind kind = Kind::poetry;
  std::size_t texts = 0;
  std::size_t collections = 0;
  double mean_text_length = 0.0;        // words per text
  double mean_collection_length = 0.0;  // words per collection
};

/// Per family and kind; (family, kind) cells without texts are omitted.
std::vector<LengthRow> length_distribution(const Corpus& corpus);

struct GroupRow {
  std::string group;
  WordStats stats;
  double proportion_pct = 0.0;
};

/// Percentage share of each count in their sum (all zeros when the sum is zero).
std::vector<double> proportions_pct(const std::vector<std::size_t>& counts);

std::vector<GroupRow> group_stats(const std::vector<CorpusGroup>& groups);

// CSV emission. Values are rounded only here.
void write_family_csv(std::ostream& out, const FamilyBreakdown& rows);
void write_group_csv(std::ostream& out, const std::vector<GroupRow>& rows);
void write_kind_csv(std::ostream& out, const WordStats& global, const WordStats& poetry,
                    const WordStats& prose);
void write_length_csv(std::ostream& out, const std::vector<LengthRow>& rows);

/// Horizontal stacked bars: total words per family with the prose share darker.
std::string family_words_svg(const FamilyBreakdown& rows);

}  // namespace varlm
