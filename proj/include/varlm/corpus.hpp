#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace varlm {

enum class Kind : std::uint8_t { poetry, prose };

std::string_view to_string(Kind kind) noexcept;
std::optional<Kind> parse_kind(std::string_view s) noexcept;

inline constexpr std::string_view kEndOfVerseTag = "<EOL>";
inline constexpr std::string_view kEndOfStanzaTag = "<EOS>";

/// One composition (a poem, a chapter, a letter) with its metadata.
struct Document {
  std::string author;
  std::string title;
  std::string collection;
  std::string family;
  Kind kind = Kind::poetry;
  std::string text;  // carries literal <EOL>/<EOS> tags

  bool operator==(const Document&) const = default;
};

/// Returns a description of the first violated document invariant, if any.
std::optional<std::string> validate_document(const Document& doc);

/// Documents in file order plus family and author indices.
class Corpus {
 public:
  using Index = std::map<std::string, std::vector<std::size_t>>;

  Corpus() = default;
  explicit Corpus(std::vector<Document> documents);

  const std::vector<Document>& documents() const noexcept { return documents_; }
  std::size_t size() const noexcept { return documents_.size(); }
  bool empty() const noexcept { return documents_.empty(); }
  const Document& operator[](std::size_t i) const { return documents_[i]; }

  const Index& family_index() const noexcept { return family_index_; }
  const Index& author_index() const noexcept { return author_index_; }

 private:
  std::vector<Document> documents_;
  Index family_index_;
  Index author_index_;
};

struct RecordIssue {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct ParseResult {
  Corpus corpus;
  std::vector<RecordIssue> issues;
};

/// Parses line-delimited JSON records. Invalid records are collected in
/// `issues`; with `strict` the first one throws ValidationError instead.
/// Zero valid records throws ValidationError("no valid records").
ParseResult parse_corpus(std::istream& in, bool strict = false);

/// File variant; an unreadable path throws IoError.
ParseResult parse_corpus(const std::filesystem::path& path, bool strict = false);

/// Writes documents in the record format parse_corpus reads.
void write_corpus(std::ostream& out, const std::vector<Document>& docs);
void write_corpus(const std::filesystem::path& path, const std::vector<Document>& docs);

/// Replaces each <EOL>/<EOS> tag with a newline, collapses whitespace runs
/// (a run containing a newline becomes "\n", otherwise " "), and trims.
std::string strip_markup(std::string_view text);

/// family -> group assignment; `group_order` fixes the order groups are reported in.
struct GroupMapping {
  std::vector<std::string> group_order;
  std::map<std::string, std::string> family_to_group;

  void assign(const std::string& family, const std::string& group);
};

/// The four diachronic groups over the 14 families of the bundled corpus layout.
GroupMapping default_period_mapping();

/// Reads a JSON object family-name -> group-name. Group order is first appearance.
GroupMapping load_mapping(const std::filesystem::path& path);
GroupMapping parse_mapping(std::string_view json_text);

struct CorpusGroup {
  std::string name;
  std::set<std::string> families;
  std::vector<Document> documents;
};

/// Partitions the corpus by mapping. An unmapped family throws ValidationError
/// naming it. Groups without documents are kept and reported in `warnings`.
std::vector<CorpusGroup> group_by_period(const Corpus& corpus, const GroupMapping& mapping,
                                         std::vector<std::string>* warnings = nullptr);

struct SplitSpec {
  double train_fraction = 0.9;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<Document> train;
  std::vector<Document> heldout;
};

/// Document-level train/heldout split, stratified by kind, deterministic in the seed.
Split split_train_heldout(const CorpusGroup& group, const SplitSpec& spec);

/// Trims ASCII whitespace from both ends.
std::string trim(std::string_view s);

}  // namespace varlm
