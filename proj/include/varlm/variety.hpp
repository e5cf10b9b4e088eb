#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "varlm/corpus.hpp"
#include "varlm/ngram.hpp"
#include "varlm/nlm.hpp"

namespace varlm {

/// Perplexity-based language distance: mean of the two directed perplexities.
double pld(double pp_12, double pp_21);

/// Perplexity-based language ratio pp_12 / pp_21. Values above 1 suggest the
/// first variety is the more varied one.
double plr(double pp_12, double pp_21);

struct DirectedPerplexity {
  std::string source;  // group the model was trained on
  std::string target;  // group it was evaluated on
  double value = 0.0;
};

struct DistanceReport {
  DirectedPerplexity pp_12;
  DirectedPerplexity pp_21;
  double pld = 0.0;
  double plr = 0.0;
};

DistanceReport distance_report(const DirectedPerplexity& pp_12, const DirectedPerplexity& pp_21);

enum class Backend : std::uint8_t { ngram, nlm };

std::string_view to_string(Backend b) noexcept;
Backend parse_backend(std::string_view s);

struct VarietyConfig {
  Backend backend = Backend::ngram;
  Granularity granularity = Granularity::character;
  VocabOptions vocab;
  NgramOptions ngram;
  TrainConfig nlm;
  double train_fraction = 0.9;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
};

/// Square matrices indexed by group; rows are L1 (the model's training group).
struct VarietyMatrix {
  std::vector<std::string> groups;
  Eigen::MatrixXd perplexity;  // [i][j] = model of group i evaluated on group j
  Eigen::MatrixXd pld;
  Eigen::MatrixXd plr;
  std::vector<DistanceReport> pairs;  // i < j
  std::vector<double> heldout_perplexity;
  Backend backend = Backend::ngram;
  nlohmann::ordered_json config;
};

/// Builds PLD/PLR matrices from a matrix of directed perplexities.
VarietyMatrix assemble_matrix(std::vector<std::string> groups, const Eigen::MatrixXd& perplexity);

/// Seed for one group's split and training, derived from the master seed and
/// the group's document contents (so identical groups train identically).
std::uint64_t group_seed(std::uint64_t master_seed, const CorpusGroup& group);

using ProgressFn = std::function<void(const std::string&)>;

/// Trains one model per group on its own train split and evaluates it on every
/// group in full. Throws ValidationError with fewer than 2 groups or an empty group;
/// a training failure is rethrown naming the group.
VarietyMatrix variety_matrix(const std::vector<CorpusGroup>& groups, const VarietyConfig& config,
                             const ProgressFn& progress = {});

void write_matrix_csv(std::ostream& out, const std::vector<std::string>& groups, const Eigen::MatrixXd& m,
                      int precision = 6);

/// Writes pld.csv, plr.csv, perplexity.csv and report.json into `dir`.
void write_variety_outputs(const VarietyMatrix& matrix, const std::filesystem::path& dir);

nlohmann::ordered_json to_json(const VarietyMatrix& matrix);

}  // namespace varlm
