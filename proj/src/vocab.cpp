#include "varlm/vocab.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "varlm/errors.hpp"
#include "varlm/textstats.hpp"

namespace varlm {

namespace {

constexpr const char* kSpecialNames[Vocabulary::kNumSpecials] = {"<BND>", "<UNK>", "<SP>", "<EOL>",
                                                                 "<EOS>"};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

}  // namespace

std::string_view to_string(Granularity g) noexcept {
  return g == Granularity::character ? "char" : "word";
}

std::optional<Granularity> parse_granularity(std::string_view s) noexcept {
  if (s == "char" || s == "character") return Granularity::character;
  if (s == "word") return Granularity::word;
  return std::nullopt;
}

std::vector<Lexeme> lex(std::string_view text, Granularity granularity) {
  std::vector<Lexeme> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto rest = text.substr(i);
    if (rest.starts_with(kEndOfVerseTag)) {
      out.push_back({Lexeme::Type::end_of_verse, {}});
      i += kEndOfVerseTag.size();
    } else if (rest.starts_with(kEndOfStanzaTag)) {
      out.push_back({Lexeme::Type::end_of_stanza, {}});
      i += kEndOfStanzaTag.size();
    } else if (is_space(text[i])) {
      while (i < text.size() && is_space(text[i])) ++i;
      if (granularity == Granularity::character) out.push_back({Lexeme::Type::space, {}});
    } else if (granularity == Granularity::character) {
      const auto n = std::min(utf8_length(static_cast<unsigned char>(text[i])), text.size() - i);
      out.push_back({Lexeme::Type::token, std::string(text.substr(i, n))});
      i += n;
    } else {
      std::size_t j = i;
      while (j < text.size() && !is_space(text[j]) && !text.substr(j).starts_with(kEndOfVerseTag) &&
             !text.substr(j).starts_with(kEndOfStanzaTag))
        ++j;
      for (auto& w : tokenize_words(text.substr(i, j - i))) out.push_back({Lexeme::Type::token, std::move(w)});
      i = j;
    }
  }
  return out;
}

Vocabulary::Vocabulary(Granularity granularity, std::vector<std::string> regular_tokens)
    : granularity_(granularity) {
  tokens_.reserve(kNumSpecials + regular_tokens.size());
  for (const char* name : kSpecialNames) tokens_.emplace_back(name);
  for (auto& t : regular_tokens) tokens_.push_back(std::move(t));
  for (std::size_t i = kNumSpecials; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second)
      throw ValidationError("duplicate vocabulary token '" + tokens_[i] + "'");
  }
}

Vocabulary Vocabulary::build(const std::vector<Document>& docs, Granularity granularity,
                             const VocabOptions& options) {
  std::map<std::string, std::size_t> counts;
  std::size_t lexemes = 0;
  for (const auto& d : docs) {
    for (auto& lx : lex(d.text, granularity)) {
      ++lexemes;
      if (lx.type == Lexeme::Type::token) ++counts[std::move(lx.text)];
    }
  }
  if (lexemes == 0) throw ValidationError("cannot build a vocabulary from empty text");

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // std::map iteration is lexicographic, so a stable sort on count keeps ties ordered.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> kept;
  for (auto& [tok, n] : ranked) {
    if (n < options.min_count) break;
    if (options.max_size != 0 && kept.size() >= options.max_size) break;
    kept.push_back(tok);
  }
  return Vocabulary(granularity, std::move(kept));
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnknown : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

std::vector<std::string> Vocabulary::regular_tokens() const {
  return {tokens_.begin() + kNumSpecials, tokens_.end()};
}

std::vector<TokenId> Vocabulary::encode(std::string_view text, std::size_t* unknown_count) const {
  std::vector<TokenId> ids;
  for (const auto& lx : lex(text, granularity_)) {
    switch (lx.type) {
      case Lexeme::Type::space: ids.push_back(kSpace); break;
      case Lexeme::Type::end_of_verse: ids.push_back(kEndOfVerse); break;
      case Lexeme::Type::end_of_stanza: ids.push_back(kEndOfStanza); break;
      case Lexeme::Type::token: {
        const auto id_ = id(lx.text);
        if (id_ == kUnknown && unknown_count) ++*unknown_count;
        ids.push_back(id_);
        break;
      }
    }
  }
  return ids;
}

ConditioningTables::ConditioningTables(std::vector<std::string> authors, std::vector<std::string> families)
    : authors_(std::move(authors)), families_(std::move(families)) {
  for (std::size_t i = 0; i < authors_.size(); ++i)
    author_index_.emplace(authors_[i], static_cast<std::uint32_t>(i + 1));
  for (std::size_t i = 0; i < families_.size(); ++i)
    family_index_.emplace(families_[i], static_cast<std::uint32_t>(i + 1));
}

ConditioningTables ConditioningTables::build(const std::vector<Document>& docs) {
  std::set<std::string> authors, families;
  for (const auto& d : docs) {
    authors.insert(d.author);
    families.insert(d.family);
  }
  return ConditioningTables({authors.begin(), authors.end()}, {families.begin(), families.end()});
}

ConditioningIds ConditioningTables::ids(const Document& doc) const {
  ConditioningIds c;
  if (auto it = author_index_.find(doc.author); it != author_index_.end()) c.author = it->second;
  if (auto it = family_index_.find(doc.family); it != family_index_.end()) c.family = it->second;
  c.kind = kind_id(doc.kind);
  return c;
}

std::vector<EncodedSegment> segment_tokens(const std::vector<TokenId>& stream,
                                           const ConditioningIds& cond, std::size_t max_length) {
  if (max_length < 1) throw ValidationError("segment length must be >= 1");
  std::vector<EncodedSegment> out;
  for (std::size_t start = 0; start < stream.size(); start += max_length) {
    const std::size_t end = std::min(start + max_length, stream.size());
    EncodedSegment seg;
    seg.cond = cond;
    seg.tokens.assign(stream.begin() + static_cast<std::ptrdiff_t>(start),
                      stream.begin() + static_cast<std::ptrdiff_t>(end));
    seg.tokens.push_back(end < stream.size() ? stream[end] : Vocabulary::kBoundary);
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<EncodedSegment> encode_document(const Document& doc, const Vocabulary& vocab,
                                            const ConditioningTables& tables,
                                            std::size_t max_length, std::size_t* unknown_count) {
  return segment_tokens(vocab.encode(doc.text, unknown_count), tables.ids(doc), max_length);
}

}  // namespace varlm
