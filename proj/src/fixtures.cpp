#include "varlm/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "varlm/errors.hpp"
#include "varlm/rng.hpp"

namespace varlm {

namespace {

// A synthetic variety: a lexicon with Zipf-distributed word frequencies.
struct Variety {
  std::vector<std::string> lexicon;
  std::vector<double> cumulative;

  // The first `core` words of the lexicon keep the top ranks; ranks are shuffled within each part.
  void set_weights(double exponent, Rng& rng, std::size_t core = 0) {
    std::vector<std::size_t> rank(lexicon.size());
    for (std::size_t i = 0; i < rank.size(); ++i) rank[i] = i;
    core = std::min(core, rank.size());
    rng.shuffle(std::span<std::size_t>(rank).first(core));
    rng.shuffle(std::span<std::size_t>(rank).subspan(core));
    cumulative.assign(lexicon.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < lexicon.size(); ++i) {
      acc += 1.0 / std::pow(static_cast<double>(rank[i] + 1), exponent);
      cumulative[i] = acc;
    }
  }

  const std::string& draw(Rng& rng) const {
    const double u = rng.uniform() * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return lexicon[static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                                     static_cast<std::ptrdiff_t>(lexicon.size()) - 1))];
  }
};

std::string random_word(const std::string& alphabet, Rng& rng) {
  const std::size_t len = 2 + rng.below(6);
  std::string w;
  for (std::size_t i = 0; i < len; ++i) w.push_back(alphabet[rng.below(alphabet.size())]);
  return w;
}

// Extends `base` with fresh words over `alphabet` until it holds `size` distinct words.
std::vector<std::string> grow_lexicon(std::vector<std::string> base, const std::string& alphabet,
                                      std::size_t size, Rng& rng) {
  std::set<std::string> seen(base.begin(), base.end());
  while (base.size() < size) {
    auto w = random_word(alphabet, rng);
    if (seen.insert(w).second) base.push_back(std::move(w));
  }
  return base;
}

// Poetry: 4-line stanzas of <EOL>-terminated verses. Prose: <EOS>-separated paragraphs.
std::string compose(const Variety& v, Kind kind, std::size_t chars, Rng& rng) {
  std::string text;
  std::size_t words_in_unit = 0, lines = 0;
  const std::size_t unit = kind == Kind::poetry ? 5 + rng.below(3) : 18 + rng.below(10);
  while (text.size() < chars) {
    if (words_in_unit > 0) text.push_back(' ');
    text += v.draw(rng);
    if (++words_in_unit < unit) continue;
    words_in_unit = 0;
    if (kind == Kind::poetry) {
      text += (++lines % 4 == 0) ? std::string(kEndOfStanzaTag) : std::string(kEndOfVerseTag);
    } else {
      text += ".";
      text += kEndOfStanzaTag;
    }
  }
  if (kind == Kind::poetry && words_in_unit > 0) text += kEndOfVerseTag;
  return text;
}

void add_group_docs(Fixture& f, const Variety& v, const std::string& group, const std::vector<std::string>& families,
                    std::size_t docs, std::size_t chars, Rng& rng) {
  for (const auto& fam : families) f.mapping.assign(fam, group);
  for (std::size_t i = 0; i < docs; ++i) {
    Document d;
    d.family = families[i % families.size()];
    d.author = d.family + " author " + std::to_string(i % 3 + 1);
    d.collection = d.family + " collection " + std::to_string(i % 2 + 1);
    d.title = group + " text " + std::to_string(i + 1);
    d.kind = i % 3 == 2 ? Kind::prose : Kind::poetry;
    d.text = compose(v, d.kind, chars, rng);
    f.documents.push_back(std::move(d));
  }
}

const std::string kLetters = "eaoinrtlscdumpvgfbhzqjkwxy";

}  // namespace

Fixture make_alternating_fixture(std::size_t total_chars, std::size_t documents) {
  if (documents < 2 || total_chars < 2 * documents)
    throw ValidationError("alternating fixture needs >= 2 documents of >= 2 characters");
  Fixture f;
  f.mapping.assign("Pattern", "ABAB");
  const std::size_t per_doc = total_chars / documents;
  for (std::size_t i = 0; i < documents; ++i) {
    Document d;
    d.author = "generator";
    d.title = "abab " + std::to_string(i + 1);
    d.collection = "patterns";
    d.family = "Pattern";
    d.kind = Kind::prose;
    for (std::size_t c = 0; c < per_doc; ++c) d.text.push_back(c % 2 == 0 ? 'a' : 'b');
    f.documents.push_back(std::move(d));
  }
  return f;
}

Fixture make_rich_simple_fixture(std::uint64_t seed, std::size_t docs_per_group, std::size_t chars_per_doc) {
  Rng rng(mix_seed(seed ^ 0x52494348ULL));
  const std::string rich_alphabet = kLetters.substr(0, 20);
  const std::string simple_alphabet = rich_alphabet.substr(0, 8);
  Variety simple, rich;
  simple.lexicon = grow_lexicon({}, simple_alphabet, 30, rng);
  rich.lexicon = grow_lexicon(simple.lexicon, rich_alphabet, 600, rng);
  simple.set_weights(1.2, rng);
  rich.set_weights(0.8, rng, simple.lexicon.size());
  Fixture f;
  add_group_docs(f, rich, "R", {"Rich"}, docs_per_group, chars_per_doc, rng);
  add_group_docs(f, simple, "S", {"Simple"}, docs_per_group, chars_per_doc, rng);
  return f;
}

Fixture make_nested_fixture(std::uint64_t seed, std::size_t docs_per_group, std::size_t chars_per_doc) {
  Rng rng(mix_seed(seed ^ 0x4E455354ULL));
  Variety a, b, c;
  c.lexicon = grow_lexicon({}, kLetters.substr(0, 6), 25, rng);
  b.lexicon = grow_lexicon(c.lexicon, kLetters.substr(0, 14), 150, rng);
  a.lexicon = grow_lexicon(b.lexicon, kLetters.substr(0, 24), 500, rng);
  a.set_weights(0.9, rng, b.lexicon.size());
  b.set_weights(1.0, rng, c.lexicon.size());
  c.set_weights(1.1, rng);
  Fixture f;
  add_group_docs(f, a, "A", {"Family A"}, docs_per_group, chars_per_doc, rng);
  add_group_docs(f, b, "B", {"Family B"}, docs_per_group, chars_per_doc, rng);
  add_group_docs(f, c, "C", {"Family C"}, docs_per_group, chars_per_doc, rng);
  return f;
}

Fixture make_period_fixture(std::uint64_t seed, std::size_t docs_per_group, std::size_t chars_per_doc) {
  Rng rng(mix_seed(seed ^ 0x50455249ULL));
  Variety core;
  core.lexicon = grow_lexicon({}, kLetters.substr(0, 12), 60, rng);
  Variety oldest, middle, late1, late2;
  oldest.lexicon = grow_lexicon(core.lexicon, kLetters.substr(0, 24), 500, rng);
  middle.lexicon = grow_lexicon(core.lexicon, kLetters.substr(0, 18), 200, rng);
  late1.lexicon = grow_lexicon(core.lexicon, kLetters.substr(0, 16), 140, rng);
  late2.lexicon = grow_lexicon(core.lexicon, kLetters.substr(0, 16), 160, rng);
  const auto shared = core.lexicon.size();
  oldest.set_weights(0.8, rng, shared);
  middle.set_weights(1.0, rng, shared);
  late1.set_weights(1.05, rng, shared);
  late2.set_weights(1.05, rng, shared);
  Fixture f;
  add_group_docs(f, oldest, "XIII", {"Sicilian School", "Stilnovisti", "Laude"}, docs_per_group, chars_per_doc, rng);
  add_group_docs(f, middle, "XIV", {"Petrarca", "Boccaccio"}, docs_per_group, chars_per_doc, rng);
  add_group_docs(f, late1, "XV-XVI-1", {"Ariosto"}, docs_per_group, chars_per_doc, rng);
  add_group_docs(f, late2, "XV-XVI-2", {"Tasso"}, docs_per_group, chars_per_doc, rng);
  return f;
}

Fixture make_fixture(const std::string& kind, std::uint64_t seed) {
  if (kind == "alternating") return make_alternating_fixture();
  if (kind == "rich-simple") return make_rich_simple_fixture(seed);
  if (kind == "nested") return make_nested_fixture(seed);
  if (kind == "periods") return make_period_fixture(seed);
  throw ValidationError("unknown fixture kind '" + kind + "' (alternating, rich-simple, nested, periods)");
}

}  // namespace varlm
