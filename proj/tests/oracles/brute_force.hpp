#pragma once

// Brute-force additive-smoothing scorer over token strings. Shares no code with
// the library beyond the Document type: it lexes, builds its own symbol set,
// segments, and scores every position by rescanning the training sequences.

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "varlm/corpus.hpp"

namespace oracle {

using Seq = std::vector<std::string>;

inline const std::string kBoundary = "<BND>";
inline const std::string kUnknown = "<UNK>";

// Characters (UTF-8 code points), whitespace runs as " ", tags as themselves.
inline Seq char_tokens(const std::string& text) {
  Seq out;
  std::size_t i = 0;
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < text.size()) {
    if (text.compare(i, 5, "<EOL>") == 0 || text.compare(i, 5, "<EOS>") == 0) {
      out.push_back(text.substr(i, 5));
      i += 5;
    } else if (space(text[i])) {
      while (i < text.size() && space(text[i])) ++i;
      out.push_back(" ");
    } else {
      const auto c = static_cast<unsigned char>(text[i]);
      std::size_t n = c < 0x80 ? 1 : c >= 0xF0 ? 4 : c >= 0xE0 ? 3 : c >= 0xC0 ? 2 : 1;
      out.push_back(text.substr(i, n));
      i += n;
    }
  }
  return out;
}

// Consecutive chunks of at most max_len inputs, each followed by its successor
// (the boundary at document end). Only the tokens after the first are scored.
inline std::vector<Seq> segments(const Seq& stream, std::size_t max_len) {
  std::vector<Seq> out;
  for (std::size_t s = 0; s < stream.size(); s += max_len) {
    const std::size_t e = std::min(stream.size(), s + max_len);
    Seq seg(stream.begin() + static_cast<std::ptrdiff_t>(s), stream.begin() + static_cast<std::ptrdiff_t>(e));
    seg.push_back(e < stream.size() ? stream[e] : kBoundary);
    out.push_back(std::move(seg));
  }
  return out;
}

inline Seq context(const Seq& seq, std::size_t i, std::size_t order) {
  Seq ctx;
  for (std::size_t k = order - 1; k >= 1; --k) ctx.push_back(i >= k ? seq[i - k] : kBoundary);
  return ctx;
}

struct Result {
  double perplexity;
  std::size_t predicted;
  std::size_t vocab_size;
};

inline Result score(const std::vector<varlm::Document>& train, const std::vector<varlm::Document>& eval,
                    std::size_t order, double alpha, std::size_t max_len = 50) {
  std::set<std::string> symbols;
  std::vector<Seq> train_segs;
  for (const auto& d : train) {
    const auto toks = char_tokens(d.text);
    for (const auto& t : toks)
      if (t != " " && t != "<EOL>" && t != "<EOS>") symbols.insert(t);
    for (auto& s : segments(toks, max_len)) train_segs.push_back(std::move(s));
  }
  const double V = static_cast<double>(symbols.size() + 5);
  auto known = [&](const std::string& t) {
    return t == " " || t == "<EOL>" || t == "<EOS>" || t == kBoundary || symbols.count(t) ? t : kUnknown;
  };

  long double product = 1.0L;
  std::size_t predicted = 0;
  for (const auto& d : eval) {
    Seq toks = char_tokens(d.text);
    for (auto& t : toks) t = known(t);
    for (const auto& seg : segments(toks, max_len)) {
      for (std::size_t i = 1; i < seg.size(); ++i) {
        const Seq ctx = context(seg, i, order);
        double ctx_total = 0.0, pair = 0.0;
        for (const auto& tr : train_segs) {
          for (std::size_t j = 1; j < tr.size(); ++j) {
            if (context(tr, j, order) != ctx) continue;
            ctx_total += 1.0;
            if (tr[j] == seg[i]) pair += 1.0;
          }
        }
        product *= static_cast<long double>((pair + alpha) / (ctx_total + alpha * V));
        ++predicted;
      }
    }
  }
  const double pp = static_cast<double>(std::pow(product, -1.0L / static_cast<long double>(predicted)));
  return {pp, predicted, symbols.size() + 5};
}

}  // namespace oracle
