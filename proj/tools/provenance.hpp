#pragma once

// Provenance sidecars: every artifact the CLI writes gets a JSON file next
// to it recording the tool version, the settings that determine its bytes,
// the seed, and SHA-256 digests of inputs and outputs. Worker count is left
// out because it never changes the output.

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace ordkit::tools {

inline constexpr const char* kVersion = "0.1.0";

inline std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

struct Provenance {
  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["tool"] = "ordkit";
    j["version"] = kVersion;
    j["command"] = command;
    j["config"] = config;
    j["seed"] = seed;
    auto digests = [](const std::vector<std::string>& paths) {
      auto arr = nlohmann::ordered_json::array();
      for (const auto& p : paths) arr.push_back({{"path", p}, {"sha256", sha256_file(p)}});
      return arr;
    };
    j["inputs"] = digests(inputs);
    j["outputs"] = digests(outputs);
    return j;
  }

  /// Writes `<artifact>.provenance.json`.
  void write_next_to(const std::string& artifact) const {
    std::ofstream out(artifact + ".provenance.json");
    if (!out) throw std::runtime_error("cannot write provenance for " + artifact);
    out << to_json().dump(2) << '\n';
  }
};

}  // namespace ordkit::tools
