#include "varlm/config.hpp"

#include <fstream>
#include <set>

#include "varlm/errors.hpp"

namespace varlm {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const char* section) {
  if (!j.is_object()) throw ValidationError(std::string("config section '") + section + "' must be an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.contains(key))
      throw ValidationError(std::string("unknown key '") + key + "' in config section '" + section + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ValidationError(std::string("bad value for config key '") + key + "': " + e.what());
    }
  }
}

}  // namespace

ordered_json to_json(const TrainConfig& c) {
  ordered_json j;
  j["granularity"] = std::string(to_string(c.granularity));
  j["vocab_min_count"] = c.vocab.min_count;
  j["vocab_max_size"] = c.vocab.max_size;
  j["max_sequence_length"] = c.max_sequence_length;
  j["batch_size"] = c.batch_size;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["eval_interval"] = c.eval_interval;
  j["seed"] = c.seed;
  j["learning_rate"] = c.adam.learning_rate;
  j["beta1"] = c.adam.beta1;
  j["beta2"] = c.adam.beta2;
  j["epsilon"] = c.adam.epsilon;
  j["clip_norm"] = c.clip_norm;
  j["metadata_dropout"] = c.metadata_dropout;
  j["init_scale"] = c.init_scale;
  j["embed_dim"] = c.resolved_embed_dim();
  j["hidden_dim"] = c.hidden_dim;
  j["author_dim"] = c.author_dim;
  j["family_dim"] = c.family_dim;
  j["kind_dim"] = c.kind_dim;
  return j;
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  reject_unknown(j,
                 {"granularity", "vocab_min_count", "vocab_max_size", "max_sequence_length", "batch_size",
                  "max_epochs", "patience", "eval_interval", "seed", "learning_rate", "beta1", "beta2",
                  "epsilon", "clip_norm", "metadata_dropout", "init_scale", "embed_dim", "hidden_dim",
                  "author_dim", "family_dim", "kind_dim"},
                 "nlm");
  if (auto it = j.find("granularity"); it != j.end()) {
    auto g = parse_granularity(it->get<std::string>());
    if (!g) throw ValidationError("granularity must be 'char' or 'word'");
    c.granularity = *g;
  }
  read(j, "vocab_min_count", c.vocab.min_count);
  read(j, "vocab_max_size", c.vocab.max_size);
  read(j, "max_sequence_length", c.max_sequence_length);
  read(j, "batch_size", c.batch_size);
  read(j, "max_epochs", c.max_epochs);
  read(j, "patience", c.patience);
  read(j, "eval_interval", c.eval_interval);
  read(j, "seed", c.seed);
  read(j, "learning_rate", c.adam.learning_rate);
  read(j, "beta1", c.adam.beta1);
  read(j, "beta2", c.adam.beta2);
  read(j, "epsilon", c.adam.epsilon);
  read(j, "clip_norm", c.clip_norm);
  read(j, "metadata_dropout", c.metadata_dropout);
  read(j, "init_scale", c.init_scale);
  read(j, "embed_dim", c.embed_dim);
  read(j, "hidden_dim", c.hidden_dim);
  read(j, "author_dim", c.author_dim);
  read(j, "family_dim", c.family_dim);
  read(j, "kind_dim", c.kind_dim);
  c.validate();
  return c;
}

ordered_json to_json(const NgramOptions& o) {
  ordered_json j;
  j["order"] = o.order;
  j["alpha"] = o.alpha;
  return j;
}

NgramOptions ngram_options_from_json(const json& j, NgramOptions o) {
  reject_unknown(j, {"order", "alpha"}, "ngram");
  read(j, "order", o.order);
  read(j, "alpha", o.alpha);
  if (o.order < 1 || !(o.alpha > 0.0)) throw ValidationError("n-gram order must be >= 1 and alpha > 0");
  return o;
}

ordered_json to_json(const TsneOptions& o) {
  ordered_json j;
  j["perplexity"] = o.perplexity;
  j["iterations"] = o.iterations;
  j["seed"] = o.seed;
  j["exaggeration"] = o.exaggeration;
  j["exaggeration_iterations"] = o.exaggeration_iterations;
  j["learning_rate"] = o.learning_rate;
  j["initial_momentum"] = o.initial_momentum;
  j["final_momentum"] = o.final_momentum;
  j["momentum_switch"] = o.momentum_switch;
  j["kl_interval"] = o.kl_interval;
  j["pca_dim"] = o.pca_dim;
  return j;
}

TsneOptions tsne_options_from_json(const json& j, TsneOptions o) {
  reject_unknown(j,
                 {"perplexity", "iterations", "seed", "exaggeration", "exaggeration_iterations",
                  "learning_rate", "initial_momentum", "final_momentum", "momentum_switch", "kl_interval",
                  "pca_dim"},
                 "tsne");
  read(j, "perplexity", o.perplexity);
  read(j, "iterations", o.iterations);
  read(j, "seed", o.seed);
  read(j, "exaggeration", o.exaggeration);
  read(j, "exaggeration_iterations", o.exaggeration_iterations);
  read(j, "learning_rate", o.learning_rate);
  read(j, "initial_momentum", o.initial_momentum);
  read(j, "final_momentum", o.final_momentum);
  read(j, "momentum_switch", o.momentum_switch);
  read(j, "kl_interval", o.kl_interval);
  read(j, "pca_dim", o.pca_dim);
  return o;
}

ordered_json to_json(const VarietyConfig& c) {
  ordered_json j;
  j["backend"] = std::string(to_string(c.backend));
  j["granularity"] = std::string(to_string(c.granularity));
  j["train_fraction"] = c.train_fraction;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["vocab_min_count"] = c.vocab.min_count;
  j["vocab_max_size"] = c.vocab.max_size;
  j["ngram"] = to_json(c.ngram);
  j["nlm"] = to_json(c.nlm);
  return j;
}

ordered_json to_json(const ToolConfig& c) {
  ordered_json j = to_json(c.variety);
  j["tsne"] = to_json(c.tsne);
  return j;
}

ToolConfig tool_config_from_json(const json& j, ToolConfig c) {
  reject_unknown(j,
                 {"backend", "granularity", "train_fraction", "seed", "jobs", "vocab_min_count",
                  "vocab_max_size", "ngram", "nlm", "tsne"},
                 "top level");
  auto& v = c.variety;
  if (auto it = j.find("backend"); it != j.end()) v.backend = parse_backend(it->get<std::string>());
  if (auto it = j.find("granularity"); it != j.end()) {
    auto g = parse_granularity(it->get<std::string>());
    if (!g) throw ValidationError("granularity must be 'char' or 'word'");
    v.granularity = *g;
  }
  read(j, "train_fraction", v.train_fraction);
  read(j, "seed", v.seed);
  read(j, "jobs", v.jobs);
  read(j, "vocab_min_count", v.vocab.min_count);
  read(j, "vocab_max_size", v.vocab.max_size);
  if (auto it = j.find("ngram"); it != j.end()) v.ngram = ngram_options_from_json(*it, v.ngram);
  if (auto it = j.find("nlm"); it != j.end()) v.nlm = train_config_from_json(*it, v.nlm);
  if (auto it = j.find("tsne"); it != j.end()) c.tsne = tsne_options_from_json(*it, c.tsne);
  if (!(v.train_fraction > 0.0 && v.train_fraction < 1.0))
    throw ValidationError("train_fraction must lie in (0, 1)");
  return c;
}

ToolConfig load_tool_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  return tool_config_from_json(j);
}

}  // namespace varlm
