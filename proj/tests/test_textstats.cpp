#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "support.hpp"
#include "varlm/textstats.hpp"

using namespace varlm;
using testing::make_doc;

namespace {

// A published 2-decimal value is reproduced when the exact value rounds to it.
bool rounds_to(double exact, double published) { return std::abs(exact - published) <= 0.005; }

}  // namespace

TEST_CASE("tokenize_words") {
  CHECK(tokenize_words("Amor, che move") == std::vector<std::string>{"Amor", "che", "move"});
  CHECK(tokenize_words("").empty());
  CHECK(tokenize_words("  ... , ;  ").empty());
  CHECK(tokenize_words("«Quantunque volte…» — disse") ==
        std::vector<std::string>{"Quantunque", "volte", "disse"});
  CHECK(tokenize_words("l'amor m'à 'l") == std::vector<std::string>{"l'amor", "m'à", "l"});
  CHECK(tokenize_words("Più\npiù") == std::vector<std::string>{"Più", "più"});

  const auto corpus = testing::fixture_corpus();
  CHECK(tokenize_words(strip_markup(corpus[0].text)) ==
        std::vector<std::string>{"Madonna", "dir", "vi", "voglio", "como", "l'amor", "m'à", "priso",
                                 "inver", "lo", "grande", "orgoglio", "che", "voi", "bella", "mostrate"});
}

TEST_CASE("average occurrences reproduces the published word table") {
  CHECK(rounds_to(average_occurrences(4090166, 180450), 22.67));
  CHECK(rounds_to(average_occurrences(1925838, 136195), 14.14));
  CHECK(rounds_to(average_occurrences(2164328, 69135), 31.31));
  CHECK(average_occurrences(0, 0) == 0.0);
}

TEST_CASE("word_stats basics") {
  const auto all_distinct = word_stats({make_doc("F", Kind::prose, "a b c d e f g h i j")});
  CHECK(all_distinct.total_occurrences == 10);
  CHECK(all_distinct.unique_words == 10);
  CHECK(all_distinct.avg_occurrences_per_word == 1.0);
  const auto empty = word_stats({});
  CHECK(empty.total_occurrences == 0);
  CHECK(empty.avg_occurrences_per_word == 0.0);
}

TEST_CASE("fixture word statistics match the recount") {
  const auto corpus = testing::fixture_corpus();
  std::vector<Document> poetry, prose;
  for (const auto& d : corpus.documents()) (d.kind == Kind::poetry ? poetry : prose).push_back(d);
  const auto g = word_stats(corpus.documents());
  CHECK(g.total_occurrences == 232);
  CHECK(g.unique_words == 179);
  CHECK(g.avg_occurrences_per_word == doctest::Approx(1.296089).epsilon(1e-6));
  CHECK(word_stats(poetry).total_occurrences == 154);
  CHECK(word_stats(poetry).unique_words == 122);
  CHECK(word_stats(prose).total_occurrences == 78);
  CHECK(word_stats(prose).unique_words == 72);
}

TEST_CASE("family breakdown matches the recount") {
  const auto rows = family_breakdown(testing::fixture_corpus());
  struct Expected {
    const char* family;
    std::size_t texts, poetry, prose, words, prose_words;
  };
  const Expected expected[] = {{"Ariosto", 2, 1, 1, 39, 18},        {"Boccaccio", 2, 0, 2, 45, 45},
                               {"Laude", 1, 0, 1, 15, 15},          {"Petrarca", 2, 2, 0, 35, 0},
                               {"Sicilian School", 2, 2, 0, 29, 0}, {"Stilnovisti", 1, 1, 0, 26, 0},
                               {"Tasso", 2, 2, 0, 43, 0}};
  REQUIRE(rows.size() == std::size(expected));
  std::size_t words = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CAPTURE(rows[i].family);
    CHECK(rows[i].family == expected[i].family);
    CHECK(rows[i].texts == expected[i].texts);
    CHECK(rows[i].poetry_texts == expected[i].poetry);
    CHECK(rows[i].prose_texts == expected[i].prose);
    CHECK(rows[i].word_occurrences == expected[i].words);
    CHECK(rows[i].prose_word_occurrences == expected[i].prose_words);
    CHECK(rows[i].poetry_texts + rows[i].prose_texts == rows[i].texts);
    words += rows[i].word_occurrences;
  }
  CHECK(words == 232);
}

TEST_CASE("single poetry document breakdown") {
  const auto rows = family_breakdown(Corpus({make_doc("Solo", Kind::poetry, "uno due<EOL>")}));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].texts == 1);
  CHECK(rows[0].poetry_texts == 1);
  CHECK(rows[0].prose_texts == 0);
}

TEST_CASE("length distribution omits empty cells") {
  const auto rows = length_distribution(testing::fixture_corpus());
  // 5 poetry-only families, Boccaccio and Laude prose-only, Ariosto both kinds
  CHECK(rows.size() == 8);
  for (const auto& r : rows) {
    CHECK(r.texts > 0);
    CHECK(r.mean_text_length >= 0.0);
  }
  const auto it = std::find_if(rows.begin(), rows.end(),
                               [](const LengthRow& r) { return r.family == "Boccaccio"; });
  REQUIRE(it != rows.end());
  CHECK(it->kind == Kind::prose);
  CHECK(it->collections == 1);
  CHECK(it->mean_text_length == doctest::Approx(22.5));
  CHECK(it->mean_collection_length == doctest::Approx(45.0));
}

TEST_CASE("group statistics match the recount") {
  const auto corpus = testing::fixture_corpus();
  const auto rows = group_stats(group_by_period(corpus, testing::fixture_mapping()));
  REQUIRE(rows.size() == 4);
  const std::size_t words[] = {70, 80, 39, 43}, unique[] = {59, 73, 37, 37};
  const double pct[] = {30.172414, 34.482759, 16.810345, 18.534483};
  double sum = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(rows[i].stats.total_occurrences == words[i]);
    CHECK(rows[i].stats.unique_words == unique[i]);
    CHECK(rows[i].proportion_pct == doctest::Approx(pct[i]).epsilon(1e-6));
    sum += rows[i].proportion_pct;
  }
  CHECK(sum == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("published group proportions and averages") {
  const std::vector<std::size_t> words = {455583, 1480379, 484276, 1669928};
  const std::size_t unique[] = {57343, 73530, 42594, 72369};
  const double published_pct[] = {11.14, 36.19, 11.84, 40.83};
  const double published_avg[] = {7.94, 20.13, 11.37, 23.08};
  const auto pct = proportions_pct(words);
  CHECK(std::accumulate(pct.begin(), pct.end(), 0.0) == doctest::Approx(100.0).epsilon(0.0005));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(rounds_to(pct[i], published_pct[i]));
    CHECK(rounds_to(average_occurrences(words[i], unique[i]), published_avg[i]));
  }
  CHECK(proportions_pct({42}) == std::vector<double>{100.0});
  CHECK(proportions_pct({0, 0}) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("additivity, subadditivity and permutation invariance") {
  auto docs = testing::fixture_corpus().documents();
  const std::vector<Document> a(docs.begin(), docs.begin() + 5), b(docs.begin() + 5, docs.end());
  const auto sa = word_stats(a), sb = word_stats(b), sab = word_stats(docs);
  CHECK(sab.total_occurrences == sa.total_occurrences + sb.total_occurrences);
  CHECK(sab.unique_words <= sa.unique_words + sb.unique_words);
  std::reverse(docs.begin(), docs.end());
  const auto rev = word_stats(docs);
  CHECK(rev.total_occurrences == sab.total_occurrences);
  CHECK(rev.unique_words == sab.unique_words);
}

TEST_CASE("CSV headers and rounding at emission") {
  const auto corpus = testing::fixture_corpus();
  std::ostringstream fam, grp;
  write_family_csv(fam, family_breakdown(corpus));
  write_group_csv(grp, group_stats(group_by_period(corpus, testing::fixture_mapping())));
  CHECK(fam.str().starts_with("family,texts,poetry,prose,words,prose_words\nAriosto,2,1,1,39,18\n"));
  CHECK(grp.str() ==
        "group,words,proportion_pct,unique,avg_occ\n"
        "XIII,70,30.17,59,1.19\n"
        "XIV,80,34.48,73,1.10\n"
        "XV-XVI-1,39,16.81,37,1.05\n"
        "XV-XVI-2,43,18.53,37,1.16\n");

  std::ostringstream quoted;
  write_family_csv(quoted, family_breakdown(Corpus({make_doc("Northern, Tuscan", Kind::prose, "x")})));
  CHECK(quoted.str().find("\"Northern, Tuscan\",1,0,1,1,1") != std::string::npos);
}

TEST_CASE("prose columns are zero on a poetry-only corpus") {
  const auto rows = family_breakdown(Corpus({make_doc("A", Kind::poetry, "x y<EOL>"),
                                             make_doc("B", Kind::poetry, "z<EOS>")}));
  for (const auto& r : rows) {
    CHECK(r.prose_texts == 0);
    CHECK(r.prose_word_occurrences == 0);
  }
}

TEST_CASE("family chart draws one bar per family plus prose overlays") {
  const auto svg = family_words_svg(family_breakdown(testing::fixture_corpus()));
  CHECK(svg.find("<svg") != std::string::npos);
  std::size_t rects = 0;
  for (std::size_t p = 0; (p = svg.find("<rect", p)) != std::string::npos; ++p) ++rects;
  // background + 7 bars + 3 prose overlays + 2 legend swatches
  CHECK(rects == 13);
}
