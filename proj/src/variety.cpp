#include "varlm/variety.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "varlm/config.hpp"
#include "varlm/errors.hpp"
#include "varlm/rng.hpp"
#include "varlm/svg.hpp"

namespace varlm {

double pld(double pp_12, double pp_21) {
  if (!std::isfinite(pp_12) || !std::isfinite(pp_21)) throw NumericError("PLD of non-finite perplexity");
  return (pp_12 + pp_21) / 2.0;
}

double plr(double pp_12, double pp_21) {
  if (!std::isfinite(pp_12) || !std::isfinite(pp_21)) throw NumericError("PLR of non-finite perplexity");
  if (!(pp_21 > 0.0) || !(pp_12 > 0.0)) throw ValidationError("PLR needs positive perplexities");
  return pp_12 / pp_21;
}

DistanceReport distance_report(const DirectedPerplexity& pp_12, const DirectedPerplexity& pp_21) {
  return {pp_12, pp_21, pld(pp_12.value, pp_21.value), plr(pp_12.value, pp_21.value)};
}

std::string_view to_string(Backend b) noexcept { return b == Backend::ngram ? "ngram" : "nlm"; }

Backend parse_backend(std::string_view s) {
  if (s == "ngram") return Backend::ngram;
  if (s == "nlm") return Backend::nlm;
  throw ValidationError("backend must be 'ngram' or 'nlm', got '" + std::string(s) + "'");
}

VarietyMatrix assemble_matrix(std::vector<std::string> groups, const Eigen::MatrixXd& pp) {
  const auto k = static_cast<Eigen::Index>(groups.size());
  if (pp.rows() != k || pp.cols() != k) throw ShapeError("perplexity matrix does not match group count");
  VarietyMatrix m;
  m.perplexity = pp;
  m.pld = Eigen::MatrixXd::Zero(k, k);
  m.plr = Eigen::MatrixXd::Ones(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    m.pld(i, i) = pp(i, i);
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const auto si = static_cast<std::size_t>(i), sj = static_cast<std::size_t>(j);
      const auto r = distance_report({groups[si], groups[sj], pp(i, j)}, {groups[sj], groups[si], pp(j, i)});
      m.pld(i, j) = m.pld(j, i) = r.pld;
      m.plr(i, j) = r.plr;
      m.plr(j, i) = plr(pp(j, i), pp(i, j));
      m.pairs.push_back(r);
    }
  }
  m.groups = std::move(groups);
  return m;
}

std::uint64_t group_seed(std::uint64_t master_seed, const CorpusGroup& group) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xFF;  // field separator
    h *= 0x100000001b3ULL;
  };
  for (const auto& d : group.documents) {
    feed(d.author);
    feed(d.title);
    feed(d.collection);
    feed(d.family);
    feed(to_string(d.kind));
    feed(d.text);
  }
  return mix_seed(master_seed ^ mix_seed(h));
}

namespace {

struct GroupOutcome {
  std::vector<double> row;
  double heldout_ppl = 0.0;
};

GroupOutcome run_group(const std::vector<CorpusGroup>& groups, std::size_t i, const VarietyConfig& config) {
  const auto& group = groups[i];
  const auto seed = group_seed(config.seed, group);
  const auto split = split_train_heldout(group, {config.train_fraction, seed});

  std::unique_ptr<LanguageModel> model;
  GroupOutcome out;
  if (config.backend == Backend::ngram) {
    auto m = std::make_unique<NgramLanguageModel>(NgramLanguageModel::train(
        split.train, config.granularity, config.ngram, config.vocab, config.nlm.max_sequence_length));
    out.heldout_ppl = perplexity_on(*m, split.heldout);
    model = std::move(m);
  } else {
    TrainConfig tc = config.nlm;
    tc.seed = seed;
    tc.granularity = config.granularity;
    tc.vocab = config.vocab;
    auto result = train(split.train, split.heldout, tc);
    out.heldout_ppl = result.best_heldout_ppl;
    model = std::make_unique<NeuralLanguageModel>(std::move(result.model));
  }
  for (const auto& target : groups) out.row.push_back(perplexity_on(*model, target.documents));
  return out;
}

}  // namespace

VarietyMatrix variety_matrix(const std::vector<CorpusGroup>& groups, const VarietyConfig& config,
                             const ProgressFn& progress) {
  if (groups.size() < 2) throw ValidationError("need >= 2 groups for a distance matrix");
  for (const auto& g : groups)
    if (g.documents.empty()) throw ValidationError("group '" + g.name + "' is empty");

  const std::size_t k = groups.size();
  std::vector<GroupOutcome> outcomes(k);
  std::vector<std::exception_ptr> errors(k);
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;

  auto worker = [&]() {
    for (std::size_t i; (i = next.fetch_add(1)) < k;) {
      try {
        outcomes[i] = run_group(groups, i, config);
        if (progress) {
          std::lock_guard lock(progress_mutex);
          progress("group " + groups[i].name + " done");
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(config.jobs, 1, k);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw ValidationError("training failed for group '" + groups[i].name + "': " + e.what());
    }
  }

  Eigen::MatrixXd pp(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      pp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = outcomes[i].row[j];

  std::vector<std::string> names;
  for (const auto& g : groups) names.push_back(g.name);
  auto m = assemble_matrix(std::move(names), pp);
  for (const auto& o : outcomes) m.heldout_perplexity.push_back(o.heldout_ppl);
  m.backend = config.backend;
  m.config = to_json(config);
  return m;
}

void write_matrix_csv(std::ostream& out, const std::vector<std::string>& groups, const Eigen::MatrixXd& m,
                      int precision) {
  out << "group";
  for (const auto& g : groups) out << ',' << g;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << groups[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << svg::num(m(i, j), precision);
    out << '\n';
  }
}

nlohmann::ordered_json to_json(const VarietyMatrix& m) {
  nlohmann::ordered_json j;
  j["backend"] = std::string(to_string(m.backend));
  j["config"] = m.config;
  j["groups"] = m.groups;
  j["orientation"] = "rows are L1 (training group); PLR[i][j] = pp(i->j) / pp(j->i)";
  auto directed = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.perplexity.rows(); ++i)
    for (Eigen::Index j = 0; j < m.perplexity.cols(); ++j)
      directed.push_back({{"source", m.groups[static_cast<std::size_t>(i)]},
                          {"target", m.groups[static_cast<std::size_t>(j)]},
                          {"perplexity", m.perplexity(i, j)}});
  j["directed_perplexities"] = directed;
  auto pairs = nlohmann::ordered_json::array();
  for (const auto& r : m.pairs)
    pairs.push_back({{"l1", r.pp_12.source},
                     {"l2", r.pp_12.target},
                     {"pp_12", r.pp_12.value},
                     {"pp_21", r.pp_21.value},
                     {"pld", r.pld},
                     {"plr", r.plr}});
  j["pairs"] = pairs;
  auto heldout = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < m.heldout_perplexity.size(); ++i) heldout[m.groups[i]] = m.heldout_perplexity[i];
  j["heldout_perplexity"] = heldout;
  return j;
}

void write_variety_outputs(const VarietyMatrix& m, const std::filesystem::path& dir) {
  auto write = [&](const char* name, auto&& body) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    body(out);
    if (!out) throw IoError("write failed: " + (dir / name).string());
  };
  write("pld.csv", [&](std::ostream& o) { write_matrix_csv(o, m.groups, m.pld); });
  write("plr.csv", [&](std::ostream& o) { write_matrix_csv(o, m.groups, m.plr); });
  write("perplexity.csv", [&](std::ostream& o) { write_matrix_csv(o, m.groups, m.perplexity); });
  write("report.json", [&](std::ostream& o) { o << to_json(m).dump(2) << '\n'; });
}

}  // namespace varlm
