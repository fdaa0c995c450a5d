#pragma once
// Run manifests: enough context to reproduce a command byte for byte.  The
// digest is FNV-1a 64 over raw input bytes; identical manifest means
// identical output, and reports embed their manifest so the contract is
// visible in the artifact itself.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

namespace qstree::io {

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string digest_hex(std::string_view bytes) {
  static const char* hexd = "0123456789abcdef";
  std::uint64_t h = fnv1a64(bytes);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hexd[h & 0xF];
    h >>= 4;
  }
  return out;
}

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> params;
  std::map<std::string, std::string> input_digests;
  std::uint64_t seed = 0;
};

inline nlohmann::json manifest_json(const RunManifest& m) {
  return nlohmann::json{{"command", m.command},
                        {"params", m.params},
                        {"input_digests", m.input_digests},
                        {"seed", m.seed}};
}

}  // namespace qstree::io
