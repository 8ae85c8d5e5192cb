#pragma once

// Reproducibility manifest written next to every CLI run's outputs.

#include <map>
#include <string>
#include <vector>

namespace thinlab {

inline constexpr const char* kToolVersion = "1.0.0";

struct RunManifest {
  std::string command;
  std::string config_snapshot;  // canonical key=value text
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  std::string started_at;   // ISO 8601 UTC
  std::string finished_at;
  std::vector<std::string> outputs;              // paths relative to the run dir
  std::map<std::string, bool> assertion_suites;  // name -> passed

  std::string to_json() const;
};

std::string iso8601_now();
void write_manifest(const std::string& path, const RunManifest& manifest);

}  // namespace thinlab
