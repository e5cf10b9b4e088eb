#include "varlm/ngram.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "varlm/errors.hpp"

namespace varlm {

namespace {

constexpr std::array<char, 8> kMagic = {'V', 'L', 'N', 'G', 'R', 'A', 'M', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get(std::istream& in) {
  static_assert(std::is_integral_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
    throw ValidationError("truncated n-gram model file");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

void check_options(const NgramOptions& o) {
  if (o.order < 1) throw ValidationError("n-gram order must be >= 1");
  if (!(o.alpha > 0.0) || !std::isfinite(o.alpha)) throw ValidationError("n-gram alpha must be > 0");
}

}  // namespace

double perplexity_from_log_prob(double total_log_prob, std::size_t predicted_tokens) {
  if (predicted_tokens == 0) throw ValidationError("perplexity of empty evaluation data");
  return std::exp(-total_log_prob / static_cast<double>(predicted_tokens));
}

double perplexity(const LanguageModel& model, std::span<const EncodedSegment> segments) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& s : segments) {
    total += model.segment_log_prob(s);
    n += s.length();
  }
  return perplexity_from_log_prob(total, n);
}

double perplexity_on(const LanguageModel& model, const std::vector<Document>& docs,
                     std::size_t* unknown_count) {
  if (docs.empty()) throw ValidationError("perplexity over an empty document list");
  std::vector<EncodedSegment> segments;
  for (const auto& d : docs) {
    auto s = model.encode(d, unknown_count);
    segments.insert(segments.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  }
  return perplexity(model, segments);
}

NgramModel NgramModel::uniform(std::size_t vocab_size, const NgramOptions& options) {
  check_options(options);
  if (vocab_size == 0) throw ValidationError("vocabulary size must be > 0");
  NgramModel m;
  m.order_ = options.order;
  m.alpha_ = options.alpha;
  m.vocab_size_ = vocab_size;
  return m;
}

NgramModel NgramModel::fit(const std::vector<std::vector<TokenId>>& sequences, std::size_t vocab_size,
                           const NgramOptions& options, std::size_t first_predicted) {
  NgramModel m = uniform(vocab_size, options);
  std::size_t predicted = 0;
  for (const auto& seq : sequences) {
    for (std::size_t i = first_predicted; i < seq.size(); ++i) {
      if (seq[i] >= vocab_size) throw ValidationError("token id out of vocabulary");
      auto& cc = m.table_[m.context_at(seq, i)];
      ++cc.total;
      ++cc.next[seq[i]];
      ++predicted;
    }
  }
  if (predicted == 0) throw ValidationError("n-gram training data is empty");
  return m;
}

NgramModel::Context NgramModel::context_at(std::span<const TokenId> seq, std::size_t i) const {
  const std::size_t width = order_ - 1;
  Context ctx(width, static_cast<char32_t>(Vocabulary::kBoundary));
  for (std::size_t k = 0; k < width; ++k) {
    // ctx[width - 1 - k] holds seq[i - 1 - k]
    if (i >= k + 1) {
      const TokenId t = seq[i - 1 - k];
      if (t >= vocab_size_) throw ValidationError("token id out of vocabulary");
      ctx[width - 1 - k] = static_cast<char32_t>(t);
    }
  }
  return ctx;
}

std::uint64_t NgramModel::total_count() const {
  std::uint64_t n = 0;
  for (const auto& [_, cc] : table_) n += cc.total;
  return n;
}

std::uint64_t NgramModel::count(const Context& ctx, TokenId next) const {
  auto it = table_.find(ctx);
  if (it == table_.end()) return 0;
  auto jt = it->second.next.find(next);
  return jt == it->second.next.end() ? 0 : jt->second;
}

double NgramModel::prob(const Context& ctx, TokenId next) const {
  if (next >= vocab_size_) throw ValidationError("token id out of vocabulary");
  const double v = static_cast<double>(vocab_size_);
  auto it = table_.find(ctx);
  if (it == table_.end()) return 1.0 / v;
  const auto& cc = it->second;
  auto jt = cc.next.find(next);
  const double c = jt == cc.next.end() ? 0.0 : static_cast<double>(jt->second);
  return (c + alpha_) / (static_cast<double>(cc.total) + alpha_ * v);
}

std::vector<double> NgramModel::distribution(const Context& ctx) const {
  std::vector<double> p(vocab_size_);
  for (std::size_t x = 0; x < vocab_size_; ++x) p[x] = prob(ctx, static_cast<TokenId>(x));
  return p;
}

double NgramModel::log_prob(std::span<const TokenId> seq, std::size_t first_predicted) const {
  double total = 0.0;
  for (std::size_t i = first_predicted; i < seq.size(); ++i)
    total += std::log(prob(context_at(seq, i), seq[i]));
  return total;
}

void NgramModel::save(std::ostream& out) const {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(order_));
  put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(alpha_));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(vocab_size_));
  put<std::uint64_t>(out, table_.size());

  std::vector<const std::pair<const Context, ContextCounts>*> rows;
  rows.reserve(table_.size());
  for (const auto& row : table_) rows.push_back(&row);
  std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->first < b->first; });
  for (const auto* row : rows) {
    for (char32_t t : row->first) put<std::uint32_t>(out, static_cast<std::uint32_t>(t));
    put<std::uint64_t>(out, row->second.total);
    std::vector<std::pair<TokenId, std::uint64_t>> next(row->second.next.begin(), row->second.next.end());
    std::sort(next.begin(), next.end());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(next.size()));
    for (const auto& [id, c] : next) {
      put<std::uint32_t>(out, id);
      put<std::uint64_t>(out, c);
    }
  }
}

void NgramModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write n-gram model: " + path.string());
  save(out);
  if (!out) throw IoError("write failed: " + path.string());
}

NgramModel NgramModel::load(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw ValidationError("not an n-gram model file");
  if (get<std::uint32_t>(in) != kFormatVersion) throw ValidationError("unsupported n-gram model version");
  NgramOptions opts;
  opts.order = get<std::uint32_t>(in);
  opts.alpha = std::bit_cast<double>(get<std::uint64_t>(in));
  const auto v = get<std::uint32_t>(in);
  NgramModel m = uniform(v, opts);
  const auto rows = get<std::uint64_t>(in);
  for (std::uint64_t r = 0; r < rows; ++r) {
    Context ctx(m.order_ - 1, U'\0');
    for (auto& t : ctx) t = static_cast<char32_t>(get<std::uint32_t>(in));
    ContextCounts cc;
    cc.total = get<std::uint64_t>(in);
    const auto n = get<std::uint32_t>(in);
    std::uint64_t sum = 0;
    for (std::uint32_t k = 0; k < n; ++k) {
      const auto id = get<std::uint32_t>(in);
      const auto c = get<std::uint64_t>(in);
      if (id >= v || c == 0) throw ValidationError("corrupt n-gram record");
      cc.next[id] = c;
      sum += c;
    }
    if (sum != cc.total) throw ValidationError("corrupt n-gram context total");
    m.table_.emplace(std::move(ctx), std::move(cc));
  }
  return m;
}

NgramModel NgramModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open n-gram model: " + path.string());
  return load(in);
}

NgramLanguageModel NgramLanguageModel::train(const std::vector<Document>& train, Granularity granularity,
                                             const NgramOptions& options,
                                             const VocabOptions& vocab_options, std::size_t max_length) {
  if (train.empty()) throw ValidationError("n-gram training split is empty");
  auto vocab = Vocabulary::build(train, granularity, vocab_options);
  const ConditioningTables none;
  std::vector<std::vector<TokenId>> sequences;
  for (const auto& d : train)
    for (auto& s : encode_document(d, vocab, none, max_length)) sequences.push_back(std::move(s.tokens));
  auto model = NgramModel::fit(sequences, vocab.size(), options, 1);
  return NgramLanguageModel(std::move(vocab), std::move(model), max_length);
}

double NgramLanguageModel::segment_log_prob(const EncodedSegment& segment) const {
  return model_.log_prob(segment.tokens, 1);
}

std::vector<EncodedSegment> NgramLanguageModel::encode(const Document& doc, std::size_t* unknown_count) const {
  return encode_document(doc, vocab_, ConditioningTables{}, max_length_, unknown_count);
}

}  // namespace varlm
