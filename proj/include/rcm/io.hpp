#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rcm {

inline constexpr const char* kCodeVersion = "1.0.0";

// shortest-exact formatting for reproducible CSV bytes
std::string fmt_double(double x);

class CsvWriter {
public:
  explicit CsvWriter(std::vector<std::string> columns);
  void row(std::span<const double> values);
  const std::string& str() const { return buf_; }

private:
  std::string buf_;
  std::size_t ncols_;
};

std::uint64_t fnv1a64(std::string_view s);
std::string hex64(std::uint64_t v);

void ensure_dir(const std::string& path);
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Per-run metadata: config hash, code version, timings, output inventory and
// the pass/fail summary. Timings live here and only here, so data.csv and
// summary.json stay byte-reproducible.
struct RunManifest {
  std::string config_hash;
  std::string code_version = kCodeVersion;
  nlohmann::json timings = nlohmann::json::object();
  std::vector<std::string> outputs;
  nlohmann::json summary = nlohmann::json::object();

  nlohmann::json to_json() const;
};

}  // namespace rcm
