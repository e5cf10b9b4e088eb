#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "varlm/config.hpp"
#include "varlm/errors.hpp"
#include "varlm/nlm.hpp"

namespace varlm {

namespace {

constexpr const char* kFormat = "varlm-nlm-checkpoint";
constexpr int kVersion = 1;

std::filesystem::path blob_path(const std::filesystem::path& manifest) {
  auto p = manifest;
  p.replace_extension(".bin");
  return p;
}

void write_floats(std::ostream& out, std::span<const float> values) {
  for (float v : values) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    const char bytes[4] = {static_cast<char>(bits & 0xFF), static_cast<char>((bits >> 8) & 0xFF),
                           static_cast<char>((bits >> 16) & 0xFF), static_cast<char>((bits >> 24) & 0xFF)};
    out.write(bytes, 4);
  }
}

void read_floats(std::istream& in, std::span<float> values) {
  unsigned char bytes[4];
  for (float& v : values) {
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw ValidationError("checkpoint blob is truncated");
    const std::uint32_t bits = std::uint32_t{bytes[0]} | (std::uint32_t{bytes[1]} << 8) |
                               (std::uint32_t{bytes[2]} << 16) | (std::uint32_t{bytes[3]} << 24);
    v = std::bit_cast<float>(bits);
  }
}

}  // namespace

void save_checkpoint(const NeuralLanguageModel& model, const std::filesystem::path& path) {
  const auto& p = model.params();
  const auto& d = p.dims;
  nlohmann::ordered_json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["granularity"] = std::string(to_string(model.vocab().granularity()));
  j["dims"] = {{"vocab", d.vocab},           {"embed", d.embed},         {"hidden", d.hidden},
               {"author_dim", d.author_dim}, {"family_dim", d.family_dim}, {"kind_dim", d.kind_dim},
               {"authors", d.authors},       {"families", d.families},   {"kinds", d.kinds}};
  j["vocabulary"] = model.vocab().regular_tokens();
  j["authors"] = model.tables().authors();
  j["families"] = model.tables().families();
  j["kinds"] = {"<unknown>", "poetry", "prose"};
  j["config"] = to_json(model.config());

  auto tensors = nlohmann::ordered_json::array();
  const auto views = p.tensors();
  const std::array<std::pair<Eigen::Index, Eigen::Index>, 9> shapes = {
      {{p.embedding.rows(), p.embedding.cols()},
       {p.lstm.input.rows(), p.lstm.input.cols()},
       {p.lstm.recurrent.rows(), p.lstm.recurrent.cols()},
       {p.lstm.bias.rows(), 1},
       {p.projection.rows(), p.projection.cols()},
       {p.projection_bias.rows(), 1},
       {p.author_table.rows(), p.author_table.cols()},
       {p.family_table.rows(), p.family_table.cols()},
       {p.kind_table.rows(), p.kind_table.cols()}}};
  for (std::size_t k = 0; k < views.size(); ++k)
    tensors.push_back({{"name", ModelParams<float>::kTensorNames[k]},
                       {"rows", shapes[k].first},
                       {"cols", shapes[k].second}});
  j["tensors"] = tensors;
  j["blob"] = blob_path(path).filename().string();
  j["blob_floats"] = p.parameter_count();

  std::ofstream manifest(path, std::ios::binary);
  if (!manifest) throw IoError("cannot write checkpoint: " + path.string());
  manifest << j.dump(2) << '\n';
  if (!manifest) throw IoError("write failed: " + path.string());

  std::ofstream blob(blob_path(path), std::ios::binary);
  if (!blob) throw IoError("cannot write checkpoint blob: " + blob_path(path).string());
  for (const auto& t : views) write_floats(blob, t);
  if (!blob) throw IoError("write failed: " + blob_path(path).string());
}

NeuralLanguageModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream manifest(path, std::ios::binary);
  if (!manifest) throw IoError("cannot open checkpoint: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(manifest);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("malformed checkpoint manifest: ") + e.what());
  }
  try {
    if (j.at("format") != kFormat) throw ValidationError("not a model checkpoint: " + path.string());
    if (j.at("version").get<int>() != kVersion) throw ValidationError("unsupported checkpoint version");
    const auto granularity = parse_granularity(j.at("granularity").get<std::string>());
    if (!granularity) throw ValidationError("bad granularity in checkpoint");

    ModelDims d;
    const auto& jd = j.at("dims");
    d.vocab = jd.at("vocab");
    d.embed = jd.at("embed");
    d.hidden = jd.at("hidden");
    d.author_dim = jd.at("author_dim");
    d.family_dim = jd.at("family_dim");
    d.kind_dim = jd.at("kind_dim");
    d.authors = jd.at("authors");
    d.families = jd.at("families");
    d.kinds = jd.at("kinds");

    Vocabulary vocab(*granularity, j.at("vocabulary").get<std::vector<std::string>>());
    ConditioningTables tables(j.at("authors").get<std::vector<std::string>>(),
                              j.at("families").get<std::vector<std::string>>());
    TrainConfig config = train_config_from_json(j.at("config"));

    auto params = ModelParams<float>::zeros(d);
    auto blob_file = path.parent_path() / j.at("blob").get<std::string>();
    std::ifstream blob(blob_file, std::ios::binary);
    if (!blob) throw IoError("cannot open checkpoint blob: " + blob_file.string());
    for (auto& t : params.tensors()) read_floats(blob, t);
    if (blob.peek() != std::char_traits<char>::eof()) throw ValidationError("checkpoint blob has trailing data");
    if (!params.all_finite()) throw NumericError("checkpoint contains non-finite parameters");
    return NeuralLanguageModel(std::move(vocab), std::move(tables), std::move(params), config);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad checkpoint manifest: ") + e.what());
  }
}

}  // namespace varlm
