#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bevmod::cli {

inline constexpr std::string_view kToolVersion = "0.3.0";

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::string_view text, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

// Files are hashed by content; directories by sorted relative path and
// content of every regular file below them.
std::uint64_t digest_path(const std::filesystem::path& path);

// Writes to a sibling temporary and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view data);
void write_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> data);

// Ordered key=value record of everything that determines a run's outputs.
class Manifest {
 public:
  void set(std::string key, std::string value);
  void set_input(const std::string& key, const std::filesystem::path& path);
  std::string body() const;
  // body() followed by `config_digest=` over the body.
  std::string render() const;
  void write(const std::filesystem::path& out_dir) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace bevmod::cli
