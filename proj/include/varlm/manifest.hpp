#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace varlm {

inline constexpr const char* kToolVersion = "0.1.0";

/// Lowercase hex SHA-256 of a file's bytes. Throws IoError if unreadable.
std::string sha256_file(const std::filesystem::path& path);

/// Record of one CLI run, written as manifest.json in its output directory.
struct RunManifest {
  struct Input {
    std::string role;
    std::string path;
    std::string sha256;
  };

  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<Input> inputs;
  std::string tool_version = kToolVersion;
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;

  explicit RunManifest(std::string cmd);

  void add_input(const std::string& role, const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;

  /// Stamps finished_at and writes <dir>/manifest.json.
  void write(const std::filesystem::path& dir);
};

std::string utc_timestamp();

}  // namespace varlm
