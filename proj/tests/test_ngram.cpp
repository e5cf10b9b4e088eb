#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles/brute_force.hpp"
#include "oracles/tiny_corpora.hpp"
#include "support.hpp"
#include "varlm/errors.hpp"
#include "varlm/ngram.hpp"
#include "varlm/rng.hpp"

using namespace varlm;
using testing::make_doc;

namespace {

std::vector<TokenId> repeat_ab(std::size_t n, TokenId a = 5, TokenId b = 6) {
  std::vector<TokenId> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(i % 2 == 0 ? a : b);
  return s;
}

NgramModel::Context ctx(std::initializer_list<TokenId> ids) {
  NgramModel::Context c;
  for (auto id : ids) c.push_back(static_cast<char32_t>(id));
  return c;
}

}  // namespace

TEST_CASE("fit counts a bigram chain by hand") {
  const auto m = NgramModel::fit({repeat_ab(6)}, 7, {.order = 2, .alpha = 1.0});
  CHECK(m.count(ctx({5}), 6) == 3);
  CHECK(m.count(ctx({6}), 5) == 2);
  CHECK(m.count(ctx({Vocabulary::kBoundary}), 5) == 1);
  CHECK(m.total_count() == 6);
}

TEST_CASE("unigram counts ignore context") {
  const auto m = NgramModel::fit({{5, 6, 5, 5}, {6}}, 7, {.order = 1, .alpha = 0.5});
  CHECK(m.table().size() == 1);
  CHECK(m.count(ctx({}), 5) == 3);
  CHECK(m.count(ctx({}), 6) == 2);
  // single token under the unigram model: (3 + 0.5) / (5 + 0.5 * 7)
  const std::vector<TokenId> one = {5};
  CHECK(m.log_prob(one) == doctest::Approx(std::log(3.5 / 8.5)).epsilon(1e-12));
}

TEST_CASE("first_predicted keeps the leading token as context only") {
  const auto m = NgramModel::fit({{5, 6, 5}}, 7, {.order = 2, .alpha = 1.0}, 1);
  CHECK(m.total_count() == 2);
  CHECK(m.count(ctx({Vocabulary::kBoundary}), 5) == 0);
  CHECK(m.count(ctx({5}), 6) == 1);
}

TEST_CASE("stored counts are positive and totals consistent") {
  Rng rng(2);
  std::vector<std::vector<TokenId>> seqs(5);
  for (auto& s : seqs)
    for (int i = 0; i < 40; ++i) s.push_back(static_cast<TokenId>(rng.below(9)));
  const auto m = NgramModel::fit(seqs, 9, {.order = 3, .alpha = 0.1});
  for (const auto& [c, cc] : m.table()) {
    std::uint64_t sum = 0;
    for (const auto& [id, n] : cc.next) {
      CHECK(n >= 1);
      sum += n;
    }
    CHECK(sum == cc.total);
  }
  CHECK(m.total_count() == 200);
}

TEST_CASE("alpha to zero on a deterministic chain gives certainty") {
  const auto m = NgramModel::fit({repeat_ab(400)}, 7, {.order = 2, .alpha = 1e-9});
  CHECK(m.prob(ctx({5}), 6) == doctest::Approx(1.0).epsilon(1e-8));
  const auto test = repeat_ab(100);
  const double per_token = m.log_prob(test) / 100.0;
  CHECK(per_token > -1e-6);
}

TEST_CASE("uniform model scores log(1/V) everywhere") {
  const auto m = NgramModel::uniform(37, {.order = 4, .alpha = 0.1});
  const std::vector<TokenId> seq = {0, 3, 36, 7, 7, 12};
  CHECK(m.log_prob(seq) == doctest::Approx(6 * std::log(1.0 / 37)).epsilon(1e-12));
  CHECK(perplexity_from_log_prob(m.log_prob(seq), seq.size()) == doctest::Approx(37.0).epsilon(1e-12));
}

TEST_CASE("uniform language model perplexity equals |V| on the fixture") {
  const auto corpus = testing::fixture_corpus();
  const auto trained = NgramLanguageModel::train(corpus.documents(), Granularity::character, {});
  const NgramLanguageModel uniform(trained.vocab(), NgramModel::uniform(trained.vocab_size(), {}), 50);
  CHECK(std::abs(perplexity_on(uniform, corpus.documents()) - 54.0) < 1e-9);
  CHECK(trained.vocab_size() == 54);
}

TEST_CASE("deterministic corpus with a near-zero alpha bigram") {
  std::string abab;
  for (int i = 0; i < 1000; ++i) abab += i % 2 ? 'b' : 'a';
  const std::vector<Document> train = {make_doc("P", Kind::prose, abab)};
  const auto m = NgramLanguageModel::train(train, Granularity::character, {.order = 2, .alpha = 1e-9});
  CHECK(perplexity_on(m, train) < 1.01);
}

// Smoothed estimates are a mixture of the empirical and uniform distributions,
// so on the training data cross-entropy is at most log |V|. Off the training
// data only the lower bound holds.
TEST_CASE("perplexity bounds of additive smoothing") {
  const auto groups = group_by_period(testing::fixture_corpus(), testing::fixture_mapping());
  for (std::size_t order : {1, 3, 7}) {
    for (double alpha : {0.01, 0.1, 1.0}) {
      for (const auto& train : groups) {
        const auto m = NgramLanguageModel::train(train.documents, Granularity::character,
                                                 {.order = order, .alpha = alpha});
        const double own = perplexity_on(m, train.documents);
        CHECK(own >= 1.0);
        CHECK(own <= static_cast<double>(m.vocab_size()) * (1.0 + 1e-12));
        for (const auto& g : groups) CHECK(perplexity_on(m, g.documents) >= 1.0);
      }
    }
  }
}

TEST_CASE("conditional distributions are normalized") {
  const auto corpus = testing::fixture_corpus();
  const auto m = NgramLanguageModel::train(corpus.documents(), Granularity::character, {.order = 3, .alpha = 0.1});
  std::vector<NgramModel::Context> contexts;
  for (const auto& [c, _] : m.model().table()) contexts.push_back(c);
  Rng rng(9);
  for (int k = 0; k < 100; ++k) {
    NgramModel::Context c;
    if (k % 2 == 0) {
      c = contexts[rng.below(contexts.size())];
    } else {
      for (int j = 0; j < 2; ++j) c.push_back(static_cast<char32_t>(rng.below(m.vocab_size())));
    }
    double sum = 0.0;
    for (double p : m.model().distribution(c)) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("larger alpha moves every distribution toward uniform") {
  const auto corpus = testing::fixture_corpus();
  std::vector<std::vector<TokenId>> seqs;
  const auto vocab = Vocabulary::build(corpus.documents(), Granularity::character);
  for (const auto& d : corpus.documents()) seqs.push_back(vocab.encode(d.text));
  std::vector<NgramModel> models;
  for (double alpha : {0.001, 0.01, 0.1, 1.0, 10.0})
    models.push_back(NgramModel::fit(seqs, vocab.size(), {.order = 2, .alpha = alpha}));
  const double u = 1.0 / static_cast<double>(vocab.size());
  for (const auto& [c, _] : models[0].table()) {
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& m : models) {
      double kl = 0.0;
      for (double p : m.distribution(c)) kl += p * std::log(p / u);
      CHECK(kl <= prev + 1e-12);
      prev = kl;
    }
  }
}

TEST_CASE("total stored count equals the predicted-token count of a group") {
  const auto groups = group_by_period(testing::fixture_corpus(), testing::fixture_mapping());
  const std::size_t expected[] = {400, 485, 222, 244};
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto m = NgramLanguageModel::train(groups[i].documents, Granularity::character, {});
    CHECK(m.model().total_count() == expected[i]);
  }
}

TEST_CASE("module perplexity agrees with the brute-force scorer") {
  const auto cases = oracle::tiny_cases();
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const auto& tc = cases[k];
    for (std::size_t order : {1, 2, 3, 5, 7}) {
      for (double alpha : {0.05, 0.1, 1.0}) {
        CAPTURE(k);
        CAPTURE(order);
        CAPTURE(alpha);
        const auto m = NgramLanguageModel::train(tc.train, Granularity::character,
                                                 {.order = order, .alpha = alpha});
        const auto brute = oracle::score(tc.train, tc.eval, order, alpha);
        CHECK(m.vocab_size() == brute.vocab_size);
        const double pp = perplexity_on(m, tc.eval);
        CHECK(std::abs(pp - brute.perplexity) <= 1e-9 * brute.perplexity);
      }
    }
  }
}

TEST_CASE("brute-force agreement with short segments") {
  const auto tc = oracle::tiny_cases()[4];
  for (std::size_t max_len : {3, 7, 50}) {
    const auto m = NgramLanguageModel::train(tc.train, Granularity::character, {.order = 4, .alpha = 0.1}, {},
                                             max_len);
    const auto brute = oracle::score(tc.train, tc.eval, 4, 0.1, max_len);
    CHECK(std::abs(perplexity_on(m, tc.eval) - brute.perplexity) <= 1e-9 * brute.perplexity);
  }
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(NgramModel::fit({}, 5, {}), ValidationError);
  CHECK_THROWS_AS(NgramModel::fit({{1, 2}}, 5, {.order = 0, .alpha = 0.1}), ValidationError);
  CHECK_THROWS_AS(NgramModel::fit({{1, 2}}, 5, {.order = 2, .alpha = 0.0}), ValidationError);
  CHECK_THROWS_AS(NgramModel::fit({{1, 9}}, 5, {}), ValidationError);
  const auto m = NgramModel::fit({{1, 2}}, 5, {.order = 2, .alpha = 0.1});
  const std::vector<TokenId> oov = {1, 7};
  CHECK_THROWS_AS(m.log_prob(oov), ValidationError);
  CHECK_THROWS_AS(perplexity_from_log_prob(0.0, 0), ValidationError);
  const auto lm = NgramLanguageModel::train({make_doc("F", Kind::prose, "ab")}, Granularity::character, {});
  CHECK_THROWS_AS(perplexity_on(lm, {}), ValidationError);
}

TEST_CASE("binary dump round-trips and is byte-stable") {
  const auto corpus = testing::fixture_corpus();
  const auto m = NgramLanguageModel::train(corpus.documents(), Granularity::character, {.order = 4, .alpha = 0.25});
  std::stringstream a;
  m.model().save(a);
  const std::string bytes = a.str();
  CHECK(bytes.substr(0, 8) == std::string("VLNGRAM\0", 8));
  CHECK(static_cast<unsigned char>(bytes[8]) == 1);  // version, little-endian
  CHECK(static_cast<unsigned char>(bytes[12]) == 4);  // order

  std::stringstream in(bytes);
  const auto loaded = NgramModel::load(in);
  CHECK(loaded.order() == 4);
  CHECK(loaded.alpha() == 0.25);
  CHECK(loaded.vocab_size() == m.vocab_size());
  CHECK(loaded.total_count() == m.model().total_count());
  std::stringstream again;
  loaded.save(again);
  CHECK(again.str() == bytes);

  const NgramLanguageModel reloaded(m.vocab(), loaded, 50);
  CHECK(perplexity_on(reloaded, corpus.documents()) == perplexity_on(m, corpus.documents()));

  std::string broken = bytes;
  broken[0] = 'X';
  std::stringstream bad(broken);
  CHECK_THROWS_AS(NgramModel::load(bad), ValidationError);
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(NgramModel::load(truncated), ValidationError);
  CHECK_THROWS_AS(NgramModel::load(std::filesystem::path("/nonexistent/model.bin")), IoError);
}
