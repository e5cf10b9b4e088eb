#include <doctest.h>

#include <set>

#include "support.hpp"
#include "varlm/errors.hpp"
#include "varlm/vocab.hpp"

using namespace varlm;
using testing::make_doc;

TEST_CASE("char vocabulary over a tiny text") {
  const auto v = Vocabulary::build({make_doc("F", Kind::poetry, "ab<EOL>ba")}, Granularity::character);
  CHECK(v.size() == 7);
  CHECK(v.regular_tokens() == std::vector<std::string>{"a", "b"});
  CHECK(v.token(Vocabulary::kBoundary) == "<BND>");
  CHECK(v.token(Vocabulary::kUnknown) == "<UNK>");
  CHECK(v.token(Vocabulary::kSpace) == "<SP>");
  CHECK(v.token(Vocabulary::kEndOfVerse) == "<EOL>");
  CHECK(v.token(Vocabulary::kEndOfStanza) == "<EOS>");
}

TEST_CASE("frequency order with lexicographic ties, and bijection") {
  const auto v = Vocabulary::build({make_doc("F", Kind::prose, "ccc bb aa d")}, Granularity::character);
  CHECK(v.regular_tokens() == std::vector<std::string>{"c", "a", "b", "d"});
  for (TokenId id = Vocabulary::kNumSpecials; id < v.size(); ++id) CHECK(v.id(v.token(id)) == id);
  CHECK(v.id("z") == Vocabulary::kUnknown);
}

TEST_CASE("word vocabulary keeps the top K") {
  const auto v = Vocabulary::build({make_doc("F", Kind::prose, "uno uno uno due due tre tre quattro cinque")},
                                   Granularity::word, {.min_count = 1, .max_size = 3});
  CHECK(v.regular_tokens() == std::vector<std::string>{"uno", "due", "tre"});
  std::size_t unknown = 0;
  const auto ids = v.encode("uno quattro, cinque!", &unknown);
  CHECK(ids == std::vector<TokenId>{5, Vocabulary::kUnknown, Vocabulary::kUnknown});
  CHECK(unknown == 2);
  const auto m = Vocabulary::build({make_doc("F", Kind::prose, "a a b")}, Granularity::word, {.min_count = 2});
  CHECK(m.regular_tokens() == std::vector<std::string>{"a"});
}

TEST_CASE("word mode maps tags and drops whitespace") {
  const auto v = Vocabulary::build({make_doc("F", Kind::poetry, "Amor, che<EOL>move<EOS>")}, Granularity::word);
  const auto ids = v.encode("Amor, che<EOL>move<EOS>");
  REQUIRE(ids.size() == 5);
  CHECK(v.token(ids[0]) == "Amor");
  CHECK(ids[2] == Vocabulary::kEndOfVerse);
  CHECK(ids[4] == Vocabulary::kEndOfStanza);
}

TEST_CASE("encoding conventions") {
  const auto v = Vocabulary::build({make_doc("F", Kind::poetry, "amore<EOL>")}, Granularity::character);
  const auto a = v.id("a"), m = v.id("m"), o = v.id("o"), r = v.id("r"), e = v.id("e");
  CHECK(v.encode("a m") == std::vector<TokenId>{a, Vocabulary::kSpace, m});
  CHECK(v.encode("a \n\t m") == std::vector<TokenId>{a, Vocabulary::kSpace, m});
  CHECK(v.encode("ama<EOL>more") == std::vector<TokenId>{a, m, a, Vocabulary::kEndOfVerse, m, o, r, e});
  std::size_t unknown = 0;
  CHECK(v.encode("è", &unknown) == std::vector<TokenId>{Vocabulary::kUnknown});
  CHECK(unknown == 1);
}

TEST_CASE("multi-byte characters are single tokens") {
  const auto v = Vocabulary::build({make_doc("F", Kind::prose, "però più")}, Granularity::character);
  CHECK(v.contains("ò"));
  CHECK(v.contains("ù"));
  CHECK(v.encode("ò").size() == 1);
}

TEST_CASE("fixture char vocabulary size matches the recount") {
  const auto v = Vocabulary::build(testing::fixture_corpus().documents(), Granularity::character);
  CHECK(v.size() == 54);
}

TEST_CASE("empty text cannot build a vocabulary") {
  CHECK_THROWS_AS(Vocabulary::build({}, Granularity::character), ValidationError);
  CHECK_THROWS_AS(Vocabulary::build({make_doc("F", Kind::prose, "")}, Granularity::character), ValidationError);
  CHECK_THROWS_AS(Vocabulary(Granularity::character, {"a", "a"}), ValidationError);
}

TEST_CASE("segmenting a 120-token stream into 50, 50, 20") {
  std::vector<TokenId> stream;
  for (TokenId i = 0; i < 120; ++i) stream.push_back(5 + i % 7);
  const auto segs = segment_tokens(stream, {1, 2, 1}, 50);
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].length() == 50);
  CHECK(segs[1].length() == 50);
  CHECK(segs[2].length() == 20);
  CHECK(segs[0].tokens.back() == stream[50]);
  CHECK(segs[2].tokens.back() == Vocabulary::kBoundary);
  for (const auto& s : segs) CHECK(s.cond == ConditioningIds{1, 2, 1});
  CHECK(segment_tokens({}, {}, 50).empty());
}

TEST_CASE("conditioning ids reserve 0 for unknown") {
  const auto corpus = testing::fixture_corpus();
  const auto t = ConditioningTables::build(corpus.documents());
  CHECK(t.author_rows() == corpus.author_index().size() + 1);
  CHECK(t.family_rows() == 8);
  const auto ids = t.ids(corpus[0]);
  CHECK(ids.author >= 1);
  CHECK(ids.family >= 1);
  CHECK(ids.kind == 1);
  CHECK(t.ids(corpus[3]).kind == 2);
  const auto stranger = t.ids(make_doc("Nowhere", Kind::prose, "x", "Nobody"));
  CHECK(stranger == ConditioningIds{0, 0, 2});
}

TEST_CASE("every encoded id lies inside the vocabulary") {
  const auto corpus = testing::fixture_corpus();
  const std::vector<Document> half(corpus.documents().begin(), corpus.documents().begin() + 6);
  const auto v = Vocabulary::build(half, Granularity::character);
  const auto t = ConditioningTables::build(half);
  for (const auto& d : corpus.documents())
    for (const auto& s : encode_document(d, v, t, 50))
      for (auto id : s.tokens) CHECK(id < v.size());
}
