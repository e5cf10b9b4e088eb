#include "varlm/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "varlm/errors.hpp"
#include "varlm/rng.hpp"

namespace varlm {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

constexpr const char* kFields[] = {"author", "title", "collection", "family", "type", "text"};

std::string required_string(const json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end()) throw ValidationError(std::string("missing field '") + field + "'");
  if (!it->is_string()) throw ValidationError(std::string("field '") + field + "' is not a string");
  return it->get<std::string>();
}

Document parse_record(const std::string& line) {
  json record;
  try {
    record = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed record: ") + e.what());
  }
  if (!record.is_object()) throw ValidationError("record is not an object");
  for (const char* field : kFields) required_string(record, field);

  Document doc;
  doc.author = trim(required_string(record, "author"));
  doc.title = required_string(record, "title");
  doc.collection = required_string(record, "collection");
  doc.family = trim(required_string(record, "family"));
  const std::string kind = required_string(record, "type");
  auto parsed = parse_kind(kind);
  if (!parsed) throw ValidationError("invalid type '" + kind + "' (expected poetry or prose)");
  doc.kind = *parsed;
  doc.text = required_string(record, "text");
  if (auto problem = validate_document(doc)) throw ValidationError(*problem);
  return doc;
}

}  // namespace

std::string_view to_string(Kind kind) noexcept {
  return kind == Kind::poetry ? "poetry" : "prose";
}

std::optional<Kind> parse_kind(std::string_view s) noexcept {
  if (s == "poetry") return Kind::poetry;
  if (s == "prose") return Kind::prose;
  return std::nullopt;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::optional<std::string> validate_document(const Document& doc) {
  if (trim(doc.author).empty()) return "empty author";
  if (trim(doc.family).empty()) return "empty family";
  if (strip_markup(doc.text).empty()) return "text is empty after markup stripping";
  const bool has_eol = doc.text.find(kEndOfVerseTag) != std::string::npos;
  const bool has_eos = doc.text.find(kEndOfStanzaTag) != std::string::npos;
  if (doc.kind == Kind::poetry && !has_eol && !has_eos)
    return "poetry text has neither <EOL> nor <EOS> tags";
  if (doc.kind == Kind::prose && has_eol) return "prose text contains <EOL>";
  return std::nullopt;
}

Corpus::Corpus(std::vector<Document> documents) : documents_(std::move(documents)) {
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    family_index_[documents_[i].family].push_back(i);
    author_index_[documents_[i].author].push_back(i);
  }
}

ParseResult parse_corpus(std::istream& in, bool strict) {
  std::vector<Document> docs;
  std::vector<RecordIssue> issues;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    try {
      docs.push_back(parse_record(line));
    } catch (const ValidationError& e) {
      if (strict) throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
      issues.push_back({lineno, e.what()});
    }
  }
  if (in.bad()) throw IoError("read error while parsing corpus");
  if (docs.empty()) throw ValidationError("no valid records");
  return {Corpus(std::move(docs)), std::move(issues)};
}

ParseResult parse_corpus(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file: " + path.string());
  return parse_corpus(in, strict);
}

void write_corpus(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& d : docs) {
    ordered_json record;
    record["author"] = d.author;
    record["title"] = d.title;
    record["collection"] = d.collection;
    record["family"] = d.family;
    record["type"] = std::string(to_string(d.kind));
    record["text"] = d.text;
    out << record.dump() << '\n';
  }
}

void write_corpus(const std::filesystem::path& path, const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus file: " + path.string());
  write_corpus(out, docs);
  if (!out) throw IoError("write failed: " + path.string());
}

std::string strip_markup(std::string_view text) {
  std::string replaced;
  replaced.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    const auto rest = text.substr(i);
    if (rest.starts_with(kEndOfVerseTag) || rest.starts_with(kEndOfStanzaTag)) {
      replaced.push_back('\n');
      i += kEndOfVerseTag.size();
    } else {
      replaced.push_back(text[i]);
      ++i;
    }
  }

  std::string out;
  out.reserve(replaced.size());
  for (std::size_t i = 0; i < replaced.size();) {
    if (!is_space(replaced[i])) {
      out.push_back(replaced[i++]);
      continue;
    }
    bool newline = false;
    while (i < replaced.size() && is_space(replaced[i])) newline |= replaced[i++] == '\n';
    out.push_back(newline ? '\n' : ' ');
  }
  return trim(out);
}

void GroupMapping::assign(const std::string& family, const std::string& group) {
  family_to_group[trim(family)] = group;
  if (std::find(group_order.begin(), group_order.end(), group) == group_order.end())
    group_order.push_back(group);
}

GroupMapping default_period_mapping() {
  GroupMapping m;
  for (const char* family :
       {"Archaic text", "Sicilian School", "Northern Didactic poetry",
        "Northern/Tuscan Courtly poetry", "Central Italy Didactic poetry",
        "Folk and Giullaresca poetry", "Laude", "Stilnovisti", "Realistic Tuscan poetry",
        "Similar to Stilnovisti"})
    m.assign(family, "XIII");
  m.assign("Boccaccio", "XIV");
  m.assign("Petrarca", "XIV");
  m.assign("Ariosto", "XV-XVI-1");
  m.assign("Tasso", "XV-XVI-2");
  return m;
}

GroupMapping parse_mapping(std::string_view json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const ordered_json::parse_error& e) {
    throw ValidationError(std::string("malformed mapping: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("mapping must be an object family -> group");
  GroupMapping m;
  for (const auto& [family, group] : j.items()) {
    if (!group.is_string())
      throw ValidationError("mapping value for family '" + family + "' is not a string");
    m.assign(family, group.get<std::string>());
  }
  return m;
}

GroupMapping load_mapping(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open mapping file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_mapping(ss.str());
}

std::vector<CorpusGroup> group_by_period(const Corpus& corpus, const GroupMapping& mapping,
                                         std::vector<std::string>* warnings) {
  std::map<std::string, std::size_t> slot;
  std::vector<CorpusGroup> groups;
  for (const auto& name : mapping.group_order) {
    slot[name] = groups.size();
    groups.push_back({name, {}, {}});
  }
  for (const auto& [family, group] : mapping.family_to_group) groups[slot.at(group)].families.insert(family);

  for (const auto& [family, _] : corpus.family_index()) {
    if (!mapping.family_to_group.contains(family))
      throw ValidationError("family '" + family + "' is not assigned to any group");
  }
  for (const auto& doc : corpus.documents())
    groups[slot.at(mapping.family_to_group.at(doc.family))].documents.push_back(doc);

  for (const auto& g : groups) {
    if (g.documents.empty() && warnings) warnings->push_back("group '" + g.name + "' has no documents");
  }
  return groups;
}

Split split_train_heldout(const CorpusGroup& group, const SplitSpec& spec) {
  const std::size_t n = group.documents.size();
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw ValidationError("train fraction must lie in (0, 1)");
  if (n < 2)
    throw ValidationError("group '" + group.name + "' has " + std::to_string(n) +
                          " document(s); cannot split");

  const auto n_train = static_cast<std::size_t>(
      std::clamp<long>(std::lround(spec.train_fraction * static_cast<double>(n)), 1L,
                       static_cast<long>(n) - 1));

  // Per-kind buckets in document order.
  std::vector<std::vector<std::size_t>> buckets(2);
  for (std::size_t i = 0; i < n; ++i)
    buckets[static_cast<std::size_t>(group.documents[i].kind)].push_back(i);

  // Largest-remainder allocation of n_train across kinds, proportional to bucket size.
  std::vector<std::size_t> quota(2, 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 2; ++k) {
    const double exact = static_cast<double>(n_train) * static_cast<double>(buckets[k].size()) /
                         static_cast<double>(n);
    quota[k] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[k];
    remainders.emplace_back(exact - std::floor(exact), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < n_train; r = (r + 1) % 2) {
    const std::size_t k = remainders[r].second;
    if (quota[k] < buckets[k].size()) {
      ++quota[k];
      ++assigned;
    }
  }

  Rng rng(mix_seed(spec.seed));
  std::vector<bool> in_train(n, false);
  for (std::size_t k = 0; k < 2; ++k) {
    auto order = buckets[k];
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t i = 0; i < quota[k]; ++i) in_train[order[i]] = true;
  }

  Split split;
  for (std::size_t i = 0; i < n; ++i)
    (in_train[i] ? split.train : split.heldout).push_back(group.documents[i]);
  return split;
}

}  // namespace varlm
