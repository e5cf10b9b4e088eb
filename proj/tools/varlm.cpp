// varlm: corpus validation, statistics, language model training, perplexity
// distances between varieties, and projection of document states.
//
// Exit codes: 0 success, 1 usage or validation failure, 2 I/O failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "varlm/config.hpp"
#include "varlm/corpus.hpp"
#include "varlm/errors.hpp"
#include "varlm/fixtures.hpp"
#include "varlm/manifest.hpp"
#include "varlm/ngram.hpp"
#include "varlm/nlm.hpp"
#include "varlm/projection.hpp"
#include "varlm/textstats.hpp"
#include "varlm/variety.hpp"

namespace fs = std::filesystem;
using namespace varlm;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::optional<std::string> granularity;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch;
  std::optional<std::size_t> patience;
  std::optional<long> hidden;
  std::optional<long> embed;
  std::optional<double> learning_rate;
  std::optional<std::size_t> order;
  std::optional<double> alpha;
  std::optional<std::size_t> jobs;
};

void add_override_flags(CLI::App* cmd, Overrides& o, bool with_backend) {
  cmd->add_option("--seed", o.seed, "Master seed");
  if (with_backend) cmd->add_option("--backend", o.backend, "ngram or nlm")->check(CLI::IsMember({"ngram", "nlm"}));
  cmd->add_option("--granularity", o.granularity, "char or word")->check(CLI::IsMember({"char", "word"}));
  cmd->add_option("--epochs", o.epochs, "Maximum training epochs (nlm)");
  cmd->add_option("--batch", o.batch, "Segments per batch (nlm)");
  cmd->add_option("--patience", o.patience, "Early-stopping patience in evaluations (nlm)");
  cmd->add_option("--hidden", o.hidden, "LSTM state size (nlm)");
  cmd->add_option("--embed", o.embed, "Token embedding size (nlm)");
  cmd->add_option("--lr", o.learning_rate, "Adam learning rate (nlm)");
  cmd->add_option("--order", o.order, "n-gram order");
  cmd->add_option("--alpha", o.alpha, "n-gram additive smoothing");
}

ToolConfig resolve_config(const std::string& path, const Overrides& o) {
  ToolConfig c = path.empty() ? ToolConfig{} : load_tool_config(path);
  auto& v = c.variety;
  if (o.seed) v.seed = *o.seed;
  if (o.backend) v.backend = parse_backend(*o.backend);
  if (o.granularity) v.granularity = *parse_granularity(*o.granularity);
  if (o.epochs) v.nlm.max_epochs = *o.epochs;
  if (o.batch) v.nlm.batch_size = *o.batch;
  if (o.patience) v.nlm.patience = *o.patience;
  if (o.hidden) v.nlm.hidden_dim = *o.hidden;
  if (o.embed) v.nlm.embed_dim = *o.embed;
  if (o.learning_rate) v.nlm.adam.learning_rate = *o.learning_rate;
  if (o.order) v.ngram.order = *o.order;
  if (o.alpha) v.ngram.alpha = *o.alpha;
  if (o.jobs) v.jobs = *o.jobs;
  v.nlm.granularity = v.granularity;
  v.nlm.vocab = v.vocab;
  v.nlm.seed = v.seed;
  v.nlm.validate();
  return c;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory: " + dir.string());
}

template <typename Body>
void write_file(const fs::path& path, Body&& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  body(out);
  if (!out) throw IoError("write failed: " + path.string());
}

Corpus load_corpus(const std::string& path) {
  auto parsed = parse_corpus(fs::path(path));
  for (const auto& issue : parsed.issues)
    std::cerr << "warning: " << path << ":" << issue.line << ": " << issue.message << '\n';
  return std::move(parsed.corpus);
}

GroupMapping mapping_or_default(const std::string& path) {
  return path.empty() ? default_period_mapping() : load_mapping(path);
}

const CorpusGroup& find_group(const std::vector<CorpusGroup>& groups, const std::string& name) {
  for (const auto& g : groups)
    if (g.name == name) return g;
  throw ValidationError("no group named '" + name + "'");
}

std::vector<CorpusGroup> make_groups(const Corpus& corpus, const GroupMapping& mapping) {
  std::vector<std::string> warnings;
  auto groups = group_by_period(corpus, mapping, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return groups;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const std::string& corpus_path, bool strict) {
  ParseResult parsed;
  try {
    parsed = parse_corpus(fs::path(corpus_path));
  } catch (const ValidationError& e) {
    std::cout << "0 documents, fatal: " << e.what() << '\n';
    return 1;
  }
  for (const auto& issue : parsed.issues)
    std::cout << (strict ? "error" : "warning") << ": line " << issue.line << ": " << issue.message << '\n';
  std::cout << parsed.corpus.size() << " documents, " << parsed.issues.size() << " errors\n";
  std::cout << parsed.corpus.family_index().size() << " families, " << parsed.corpus.author_index().size()
            << " authors\n";
  return strict && !parsed.issues.empty() ? 1 : 0;
}

// ---------------------------------------------------------------- stats

int cmd_stats(const std::string& corpus_path, const std::string& mapping_path, bool default_mapping,
              const std::string& out_dir, bool svg) {
  RunManifest manifest("stats");
  manifest.add_input("corpus", corpus_path);
  const Corpus corpus = load_corpus(corpus_path);
  ensure_dir(out_dir);
  const fs::path out(out_dir);

  const auto families = family_breakdown(corpus);
  write_file(out / "family.csv", [&](std::ostream& o) { write_family_csv(o, families); });

  std::vector<Document> poetry, prose;
  for (const auto& d : corpus.documents()) (d.kind == Kind::poetry ? poetry : prose).push_back(d);
  write_file(out / "kinds.csv", [&](std::ostream& o) {
    write_kind_csv(o, word_stats(corpus.documents()), word_stats(poetry), word_stats(prose));
  });
  write_file(out / "lengths.csv", [&](std::ostream& o) { write_length_csv(o, length_distribution(corpus)); });

  if (!mapping_path.empty() || default_mapping) {
    if (!mapping_path.empty()) manifest.add_input("mapping", mapping_path);
    const auto groups = make_groups(corpus, mapping_or_default(mapping_path));
    write_file(out / "groups.csv", [&](std::ostream& o) { write_group_csv(o, group_stats(groups)); });
  }
  if (svg) write_file(out / "family_words.svg", [&](std::ostream& o) { o << family_words_svg(families); });

  manifest.config = {{"mapping", mapping_path.empty() ? (default_mapping ? "default" : "none") : mapping_path},
                     {"svg", svg}};
  manifest.write(out);
  std::cout << corpus.size() << " documents, " << families.size() << " families; tables written to "
            << out_dir << '\n';
  return 0;
}

// ---------------------------------------------------------------- train

int cmd_train(const std::string& corpus_path, const std::string& mapping_path, const std::string& group_name,
              const std::string& config_path, const Overrides& overrides, const std::string& out_dir) {
  const ToolConfig config = resolve_config(config_path, overrides);
  const auto& vc = config.variety;
  RunManifest manifest("train");
  manifest.add_input("corpus", corpus_path);
  if (!mapping_path.empty()) manifest.add_input("mapping", mapping_path);
  if (!config_path.empty()) manifest.add_input("config", config_path);

  const Corpus corpus = load_corpus(corpus_path);
  const auto groups = make_groups(corpus, mapping_or_default(mapping_path));
  const CorpusGroup& group = find_group(groups, group_name);
  const auto seed = group_seed(vc.seed, group);
  const auto split = split_train_heldout(group, {vc.train_fraction, seed});
  ensure_dir(out_dir);
  const fs::path out(out_dir);

  manifest.seed = vc.seed;
  manifest.config = to_json(config);
  manifest.config["group"] = group_name;
  manifest.config["group_seed"] = seed;

  if (vc.backend == Backend::ngram) {
    const auto model = NgramLanguageModel::train(split.train, vc.granularity, vc.ngram, vc.vocab,
                                                 vc.nlm.max_sequence_length);
    model.model().save(out / "ngram.bin");
    write_file(out / "vocab.json", [&](std::ostream& o) {
      nlohmann::ordered_json j;
      j["granularity"] = std::string(to_string(model.vocab().granularity()));
      j["max_sequence_length"] = model.max_length();
      j["tokens"] = model.vocab().regular_tokens();
      o << j.dump(2) << '\n';
    });
    const double ppl = perplexity_on(model, split.heldout);
    std::cout << "group " << group_name << ": " << split.train.size() << " train / " << split.heldout.size()
              << " heldout documents, |V| = " << model.vocab_size() << ", heldout perplexity " << ppl << '\n';
  } else {
    TrainConfig tc = vc.nlm;
    tc.seed = seed;
    auto result = train(split.train, split.heldout, tc, [](const TrainLogEntry& e) {
      std::cerr << "step " << e.step << " epoch " << e.epoch << " heldout ppl " << e.heldout_ppl << '\n';
    });
    save_checkpoint(result.model, out / "checkpoint.json");
    write_file(out / "train_log.jsonl", [&](std::ostream& o) { write_train_log(o, result.log); });
    std::cout << "group " << group_name << ": " << split.train.size() << " train / " << split.heldout.size()
              << " heldout documents, |V| = " << result.model.vocab_size() << ", best heldout perplexity "
              << result.best_heldout_ppl << " at step " << result.best_step << '\n';
  }
  manifest.write(out);
  return 0;
}

// ---------------------------------------------------------------- ppl

int cmd_ppl(const std::string& checkpoint, const std::string& ngram_dir, const std::string& corpus_path,
            const std::string& mapping_path, const std::string& group_name) {
  if (checkpoint.empty() == ngram_dir.empty())
    throw ValidationError("give exactly one of --checkpoint or --ngram");
  std::unique_ptr<LanguageModel> model;
  if (!checkpoint.empty()) {
    model = std::make_unique<NeuralLanguageModel>(load_checkpoint(checkpoint));
  } else {
    const fs::path dir(ngram_dir);
    std::ifstream in(dir / "vocab.json", std::ios::binary);
    if (!in) throw IoError("cannot open " + (dir / "vocab.json").string());
    const auto j = nlohmann::json::parse(in);
    Vocabulary vocab(*parse_granularity(j.at("granularity").get<std::string>()),
                     j.at("tokens").get<std::vector<std::string>>());
    model = std::make_unique<NgramLanguageModel>(std::move(vocab), NgramModel::load(dir / "ngram.bin"),
                                                 j.at("max_sequence_length").get<std::size_t>());
  }
  const Corpus corpus = load_corpus(corpus_path);
  std::vector<Document> docs = corpus.documents();
  if (!group_name.empty()) docs = find_group(make_groups(corpus, mapping_or_default(mapping_path)), group_name).documents;
  std::size_t unknown = 0;
  const double ppl = perplexity_on(*model, docs, &unknown);
  std::cout << "perplexity " << ppl << " over " << docs.size() << " documents (|V| = " << model->vocab_size()
            << ", " << unknown << " tokens mapped to unknown)\n";
  return 0;
}

// ---------------------------------------------------------------- distance

int cmd_distance(const std::string& corpus_path, const std::string& mapping_path, const std::string& config_path,
                 const Overrides& overrides, const std::string& out_dir) {
  const ToolConfig config = resolve_config(config_path, overrides);
  RunManifest manifest("distance");
  manifest.add_input("corpus", corpus_path);
  if (!mapping_path.empty()) manifest.add_input("mapping", mapping_path);
  if (!config_path.empty()) manifest.add_input("config", config_path);

  const Corpus corpus = load_corpus(corpus_path);
  const auto groups = make_groups(corpus, mapping_or_default(mapping_path));
  if (groups.size() < 2) throw ValidationError("need >= 2 groups for a distance matrix");
  const auto matrix =
      variety_matrix(groups, config.variety, [](const std::string& msg) { std::cerr << msg << '\n'; });
  ensure_dir(out_dir);
  write_variety_outputs(matrix, out_dir);
  manifest.seed = config.variety.seed;
  manifest.config = to_json(config);
  manifest.write(out_dir);

  std::cout << "PLD (" << to_string(matrix.backend) << ")\n";
  write_matrix_csv(std::cout, matrix.groups, matrix.pld, 2);
  std::cout << "PLR (rows = L1)\n";
  write_matrix_csv(std::cout, matrix.groups, matrix.plr, 2);
  return 0;
}

// ---------------------------------------------------------------- project

int cmd_project(const std::string& checkpoint, const std::string& corpus_path, const std::string& mapping_path,
                const std::string& config_path, const std::string& out_dir, const std::string& method,
                std::optional<double> perplexity_param, std::optional<std::size_t> iterations,
                std::optional<std::uint64_t> seed) {
  ToolConfig config = config_path.empty() ? ToolConfig{} : load_tool_config(config_path);
  if (perplexity_param) config.tsne.perplexity = *perplexity_param;
  if (iterations) config.tsne.iterations = *iterations;
  if (seed) config.tsne.seed = *seed;

  RunManifest manifest("project");
  manifest.add_input("checkpoint", checkpoint);
  manifest.add_input("corpus", corpus_path);
  if (!mapping_path.empty()) manifest.add_input("mapping", mapping_path);
  if (!config_path.empty()) manifest.add_input("config", config_path);

  const auto model = load_checkpoint(checkpoint);
  const Corpus corpus = load_corpus(corpus_path);
  const auto groups = make_groups(corpus, mapping_or_default(mapping_path));
  std::vector<std::string> warnings;
  std::size_t unknown = 0;
  const auto states = extract_states(model, groups, &warnings, &unknown);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  if (unknown > 0)
    std::cerr << "warning: " << unknown << " tokens not in the checkpoint vocabulary were mapped to unknown\n";

  PointSet points;
  points.points.resize(static_cast<Eigen::Index>(states.size()), model.params().dims.hidden);
  for (std::size_t i = 0; i < states.size(); ++i) {
    points.points.row(static_cast<Eigen::Index>(i)) = states[i].state.cast<double>().transpose();
    points.groups.push_back(states[i].group);
    points.kinds.push_back(states[i].kind);
  }

  std::string used = method;
  const double n = static_cast<double>(states.size());
  if (used == "tsne" && (n - 1.0) / 3.0 < 5.0) {
    std::cerr << "warning: " << states.size() << " documents are too few for t-SNE; using PCA\n";
    used = "pca";
  }
  if (used == "tsne" && config.tsne.perplexity > (n - 1.0) / 3.0) {
    config.tsne.perplexity = (n - 1.0) / 3.0;
    std::cerr << "warning: t-SNE perplexity lowered to " << config.tsne.perplexity << '\n';
  }

  ensure_dir(out_dir);
  const fs::path out(out_dir);
  PointSet layout;
  if (used == "tsne") {
    const auto result = tsne(points, config.tsne);
    layout = result.layout;
    write_file(out / "kl_trace.csv", [&](std::ostream& o) {
      o << "iteration,kl\n";
      for (const auto& [it, kl] : result.kl_trace) o << it << ',' << kl << '\n';
    });
  } else {
    layout = pca(points, 2).projected;
  }
  export_plot(layout, out / "layout");

  manifest.seed = config.tsne.seed;
  manifest.config = {{"method", used}, {"tsne", to_json(config.tsne)}, {"unknown_tokens", unknown}};
  manifest.write(out);
  std::cout << states.size() << " document states projected with " << used << " to " << (out / "layout.svg").string()
            << '\n';
  return 0;
}

// ---------------------------------------------------------------- fixtures

int cmd_fixtures(const std::string& kind, std::uint64_t seed, const std::string& out_dir) {
  const Fixture f = make_fixture(kind, seed);
  ensure_dir(out_dir);
  const fs::path out(out_dir);
  write_corpus(out / "corpus.jsonl", f.documents);
  write_file(out / "mapping.json", [&](std::ostream& o) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    // group order follows first appearance, so emit families group by group
    for (const auto& g : f.mapping.group_order)
      for (const auto& [family, group] : f.mapping.family_to_group)
        if (group == g) j[family] = group;
    o << j.dump(2) << '\n';
  });
  RunManifest manifest("fixtures generate");
  manifest.seed = seed;
  manifest.config = {{"kind", kind}};
  manifest.write(out);
  std::cout << f.documents.size() << " documents (" << kind << ") written to " << out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corpus statistics, language models and perplexity-based distances between language varieties"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string corpus, mapping, config, out, group, checkpoint, ngram_dir, method = "tsne", fixture_kind;
  bool strict = false, svg = false, default_mapping = false;
  Overrides overrides;
  std::optional<double> tsne_perplexity;
  std::optional<std::size_t> tsne_iterations;
  std::optional<std::uint64_t> project_seed;
  std::uint64_t fixture_seed = 1;

  auto* validate = app.add_subcommand("validate", "Parse and validate a corpus file");
  validate->add_option("corpus", corpus, "Corpus file (JSON lines)")->required();
  validate->add_flag("--strict", strict, "Treat any record error as fatal");

  auto* stats = app.add_subcommand("stats", "Word and text statistics as CSV (and SVG)");
  stats->add_option("corpus", corpus, "Corpus file")->required();
  stats->add_option("--mapping", mapping, "family -> group JSON mapping");
  stats->add_flag("--default-mapping", default_mapping, "Use the bundled four-period mapping");
  stats->add_option("--out", out, "Output directory")->required();
  stats->add_flag("--svg", svg, "Also write family_words.svg");

  auto* train_cmd = app.add_subcommand("train", "Train one group's language model");
  train_cmd->add_option("corpus", corpus, "Corpus file")->required();
  train_cmd->add_option("--mapping", mapping, "family -> group JSON mapping (default: four periods)");
  train_cmd->add_option("--group", group, "Group to train on")->required();
  train_cmd->add_option("--config", config, "JSON config file");
  train_cmd->add_option("--out", out, "Output directory")->required();
  add_override_flags(train_cmd, overrides, true);

  auto* ppl = app.add_subcommand("ppl", "Perplexity of a trained model on a corpus");
  ppl->add_option("corpus", corpus, "Corpus file")->required();
  ppl->add_option("--checkpoint", checkpoint, "Neural checkpoint manifest (checkpoint.json)");
  ppl->add_option("--ngram", ngram_dir, "Directory holding ngram.bin and vocab.json");
  ppl->add_option("--mapping", mapping, "family -> group JSON mapping");
  ppl->add_option("--group", group, "Restrict evaluation to one group");

  auto* distance = app.add_subcommand("distance", "PLD and PLR matrices between groups");
  distance->add_option("corpus", corpus, "Corpus file")->required();
  distance->add_option("--mapping", mapping, "family -> group JSON mapping (default: four periods)");
  distance->add_option("--config", config, "JSON config file");
  distance->add_option("--out", out, "Output directory")->required();
  distance->add_option("--jobs", overrides.jobs, "Parallel group trainings");
  add_override_flags(distance, overrides, true);

  auto* project = app.add_subcommand("project", "2-d projection of document states");
  project->add_option("corpus", corpus, "Corpus file")->required();
  project->add_option("--checkpoint", checkpoint, "Neural checkpoint manifest")->required();
  project->add_option("--mapping", mapping, "family -> group JSON mapping (default: four periods)");
  project->add_option("--config", config, "JSON config file (tsne section)");
  project->add_option("--out", out, "Output directory")->required();
  project->add_option("--method", method, "tsne or pca")->check(CLI::IsMember({"tsne", "pca"}));
  project->add_option("--perplexity", tsne_perplexity, "t-SNE perplexity");
  project->add_option("--iterations", tsne_iterations, "t-SNE iterations");
  project->add_option("--seed", project_seed, "t-SNE seed");

  auto* fixtures = app.add_subcommand("fixtures", "Synthetic corpora");
  fixtures->require_subcommand(1);
  auto* generate = fixtures->add_subcommand("generate", "Write a synthetic corpus and its mapping");
  generate->add_option("--kind", fixture_kind, "alternating, rich-simple, nested, periods")->required();
  generate->add_option("--seed", fixture_seed, "Generator seed");
  generate->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*validate) return cmd_validate(corpus, strict);
    if (*stats) return cmd_stats(corpus, mapping, default_mapping, out, svg);
    if (*train_cmd) return cmd_train(corpus, mapping, group, config, overrides, out);
    if (*ppl) return cmd_ppl(checkpoint, ngram_dir, corpus, mapping, group);
    if (*distance) return cmd_distance(corpus, mapping, config, overrides, out);
    if (*project)
      return cmd_project(checkpoint, corpus, mapping, config, out, method, tsne_perplexity, tsne_iterations,
                         project_seed);
    if (*generate) return cmd_fixtures(fixture_kind, fixture_seed, out);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
