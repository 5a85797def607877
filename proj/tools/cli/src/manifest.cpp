#include "chiralcp_cli/manifest.hpp"

#include <openssl/evp.h>

#include <stdexcept>

#include "json.hpp"

namespace chiralcp::cli {

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["tool"] = tool;
  j["version"] = version;
  j["command"] = command;
  j["config_digest"] = config_digest;
  j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  j["workers"] = workers;
  j["started_utc"] = started_utc;
  j["wall_clock_s"] = wall_clock_s;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  RunManifest m;
  m.tool = j.at("tool").get<std::string>();
  m.version = j.at("version").get<std::string>();
  m.command = j.at("command").get<std::string>();
  m.config_digest = j.at("config_digest").get<std::string>();
  if (!j.at("seed").is_null()) m.seed = j.at("seed").get<std::uint64_t>();
  m.workers = j.at("workers").get<int>();
  m.started_utc = j.at("started_utc").get<std::string>();
  m.wall_clock_s = j.at("wall_clock_s").get<double>();
  m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
  return m;
}

}  // namespace chiralcp::cli
