#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace chiralcp::cli {

std::string sha256_hex(const std::string& data);

struct RunManifest {
  std::string tool = "chiralcp";
  std::string version;
  std::string command;
  std::string config_digest;  // sha256 of the canonical config echo
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::string started_utc;
  double wall_clock_s = 0.0;
  std::map<std::string, std::string> outputs;  // file name -> sha256

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

}  // namespace chiralcp::cli
