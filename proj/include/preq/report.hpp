#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "preq/verify.hpp"

namespace preq {

/// FNV-1a over the canonical (key-sorted) config dump; hex string.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string config_digest(const Json& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  return std::string(buf);
}

/// Outcome of one CLI run. Wall-clock timing is reported on stderr by the
/// tool, never here: the serialized report must be byte-stable for identical
/// (config, seed).
struct RunReport {
  std::string command;
  std::string digest;
  std::vector<CheckResult> checks;
  std::vector<std::string> warnings;
  Json details;

  bool pass() const {
    for (const CheckResult& c : checks)
      if (!c.pass) return false;
    return true;
  }

  Json to_json() const {
    Json jchecks = Json::array();
    for (const CheckResult& c : checks) jchecks.push_back(check_result_json(c));
    Json out{{"command", command},
             {"config_digest", digest},
             {"checks", std::move(jchecks)},
             {"warnings", warnings},
             {"pass", pass()}};
    if (!details.is_null()) out["details"] = details;
    return out;
  }
};

}  // namespace preq
