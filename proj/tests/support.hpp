#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "varlm/corpus.hpp"

namespace testing {

inline std::filesystem::path data_dir() { return VARLM_TEST_DATA; }

inline varlm::Corpus fixture_corpus() {
  return varlm::parse_corpus(data_dir() / "fixture_corpus.jsonl").corpus;
}

inline varlm::GroupMapping fixture_mapping() { return varlm::load_mapping(data_dir() / "fixture_mapping.json"); }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh scratch directory under the build tree, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::path(VARLM_TEST_SCRATCH) / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& leaf) const { return path / leaf; }
};

inline varlm::Document make_doc(std::string family, varlm::Kind kind, std::string text,
                                std::string author = "someone") {
  varlm::Document d;
  d.author = std::move(author);
  d.title = "t";
  d.collection = "c";
  d.family = std::move(family);
  d.kind = kind;
  d.text = std::move(text);
  return d;
}

}  // namespace testing
