#include "thinlab/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "json.hpp"

#include "thinlab/errors.hpp"

namespace thinlab {

std::string iso8601_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[80];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec);
  return buf;
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["config_snapshot"] = config_snapshot;
  j["seed"] = seed;
  j["tool_version"] = tool_version;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["outputs"] = outputs;
  j["assertion_suites"] = assertion_suites;
  return j.dump(2) + "\n";
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest '" + path + "'");
  out << manifest.to_json();
}

}  // namespace thinlab
