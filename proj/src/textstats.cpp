#include "varlm/textstats.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_set>

#include "varlm/svg.hpp"

namespace varlm {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Multi-byte punctuation common in Italian editions.
constexpr std::array<std::string_view, 14> kUnicodePunct = {
    "«", "»", "“", "”", "‘", "’", "„",
    "—", "–", "…", "¡", "¿", "·", "‹"};

// Length in bytes of a punctuation mark at the front (or back) of `s`, 0 if none.
std::size_t leading_punct(std::string_view s) {
  if (s.empty()) return 0;
  const auto c = static_cast<unsigned char>(s.front());
  if (c < 0x80) return std::ispunct(c) ? 1 : 0;
  for (auto p : kUnicodePunct)
    if (s.starts_with(p)) return p.size();
  return 0;
}

std::size_t trailing_punct(std::string_view s) {
  if (s.empty()) return 0;
  const auto c = static_cast<unsigned char>(s.back());
  if (c < 0x80) return std::ispunct(c) ? 1 : 0;
  for (auto p : kUnicodePunct)
    if (s.ends_with(p)) return p.size();
  return 0;
}

std::size_t count_words(const Document& doc) {
  return tokenize_words(strip_markup(doc.text)).size();
}

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    std::string_view tok = text.substr(i, j - i);
    for (std::size_t k; (k = leading_punct(tok)) > 0;) tok.remove_prefix(k);
    for (std::size_t k; (k = trailing_punct(tok)) > 0;) tok.remove_suffix(k);
    if (!tok.empty()) out.emplace_back(tok);
    i = j;
  }
  return out;
}

double average_occurrences(std::size_t total, std::size_t unique) noexcept {
  return unique == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(unique);
}

WordStats word_stats(const std::vector<Document>& docs) {
  WordStats s;
  std::unordered_set<std::string> seen;
  for (const auto& d : docs) {
    for (auto& w : tokenize_words(strip_markup(d.text))) {
      ++s.total_occurrences;
      seen.insert(std::move(w));
    }
  }
  s.unique_words = seen.size();
  s.avg_occurrences_per_word = average_occurrences(s.total_occurrences, s.unique_words);
  return s;
}

FamilyBreakdown family_breakdown(const Corpus& corpus) {
  FamilyBreakdown rows;
  for (const auto& [family, indices] : corpus.family_index()) {
    FamilyRow row;
    row.family = family;
    for (auto i : indices) {
      const auto& d = corpus[i];
      const auto words = count_words(d);
      ++row.texts;
      row.word_occurrences += words;
      if (d.kind == Kind::poetry) {
        ++row.poetry_texts;
      } else {
        ++row.prose_texts;
        row.prose_word_occurrences += words;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<LengthRow> length_distribution(const Corpus& corpus) {
  std::vector<LengthRow> rows;
  for (const auto& [family, indices] : corpus.family_index()) {
    for (Kind kind : {Kind::poetry, Kind::prose}) {
      std::size_t texts = 0, words = 0;
      std::set<std::string> collections;
      for (auto i : indices) {
        const auto& d = corpus[i];
        if (d.kind != kind) continue;
        ++texts;
        words += count_words(d);
        collections.insert(d.collection);
      }
      if (texts == 0) continue;
      LengthRow row;
      row.family = family;
      row.kind = kind;
      row.texts = texts;
      row.collections = collections.size();
      row.mean_text_length = static_cast<double>(words) / static_cast<double>(texts);
      row.mean_collection_length = static_cast<double>(words) / static_cast<double>(collections.size());
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<double> proportions_pct(const std::vector<std::size_t>& counts) {
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  std::vector<double> out;
  out.reserve(counts.size());
  for (auto c : counts) out.push_back(total == 0.0 ? 0.0 : 100.0 * static_cast<double>(c) / total);
  return out;
}

std::vector<GroupRow> group_stats(const std::vector<CorpusGroup>& groups) {
  std::vector<GroupRow> rows;
  std::vector<std::size_t> counts;
  for (const auto& g : groups) {
    rows.push_back({g.name, word_stats(g.documents), 0.0});
    counts.push_back(rows.back().stats.total_occurrences);
  }
  const auto pct = proportions_pct(counts);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].proportion_pct = pct[i];
  return rows;
}

void write_family_csv(std::ostream& out, const FamilyBreakdown& rows) {
  out << "family,texts,poetry,prose,words,prose_words\n";
  for (const auto& r : rows)
    out << csv_field(r.family) << ',' << r.texts << ',' << r.poetry_texts << ',' << r.prose_texts
        << ',' << r.word_occurrences << ',' << r.prose_word_occurrences << '\n';
}

void write_group_csv(std::ostream& out, const std::vector<GroupRow>& rows) {
  out << "group,words,proportion_pct,unique,avg_occ\n";
  for (const auto& r : rows)
    out << csv_field(r.group) << ',' << r.stats.total_occurrences << ',' << fmt2(r.proportion_pct)
        << ',' << r.stats.unique_words << ',' << fmt2(r.stats.avg_occurrences_per_word) << '\n';
}

void write_kind_csv(std::ostream& out, const WordStats& global, const WordStats& poetry,
                    const WordStats& prose) {
  out << "kind,words,unique,avg_occ\n";
  auto row = [&](std::string_view name, const WordStats& s) {
    out << name << ',' << s.total_occurrences << ',' << s.unique_words << ','
        << fmt2(s.avg_occurrences_per_word) << '\n';
  };
  row("global", global);
  row("poetry", poetry);
  row("prose", prose);
}

void write_length_csv(std::ostream& out, const std::vector<LengthRow>& rows) {
  out << "family,kind,texts,collections,mean_text_length,mean_collection_length\n";
  for (const auto& r : rows)
    out << csv_field(r.family) << ',' << to_string(r.kind) << ',' << r.texts << ',' << r.collections
        << ',' << fmt2(r.mean_text_length) << ',' << fmt2(r.mean_collection_length) << '\n';
}

std::string family_words_svg(const FamilyBreakdown& rows) {
  constexpr double kLabelWidth = 240, kBarWidth = 480, kRowHeight = 24, kTop = 40;
  const double height = kTop + kRowHeight * static_cast<double>(rows.size()) + 50;
  svg::Canvas canvas(kLabelWidth + kBarWidth + 120, height);
  canvas.text(10, 24, "Word occurrences per family (darker: prose)", 14);

  std::size_t max_words = 1;
  for (const auto& r : rows) max_words = std::max(max_words, r.word_occurrences);
  const double scale = kBarWidth / static_cast<double>(max_words);

  double y = kTop;
  for (const auto& r : rows) {
    const double total_w = scale * static_cast<double>(r.word_occurrences);
    const double prose_w = scale * static_cast<double>(r.prose_word_occurrences);
    canvas.text(kLabelWidth - 8, y + 15, r.family, 12, "end");
    canvas.rect(kLabelWidth, y + 3, total_w, kRowHeight - 6, "#9ecae1");
    if (prose_w > 0) canvas.rect(kLabelWidth, y + 3, prose_w, kRowHeight - 6, "#08519c");
    canvas.text(kLabelWidth + total_w + 6, y + 15, std::to_string(r.word_occurrences), 11);
    y += kRowHeight;
  }
  canvas.rect(kLabelWidth, y + 14, 12, 12, "#9ecae1");
  canvas.text(kLabelWidth + 18, y + 24, "poetry", 11);
  canvas.rect(kLabelWidth + 80, y + 14, 12, 12, "#08519c");
  canvas.text(kLabelWidth + 98, y + 24, "prose", 11);
  return canvas.str();
}

}  // namespace varlm
