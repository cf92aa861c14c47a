#pragma once

#include <cstdint>
#include <string>

#include "hjnet/config.hpp"

namespace hjnet {

/// Everything needed to regenerate a run: the command, the fully resolved
/// configuration and the seed, plus a content hash over exactly those.
struct RunManifest {
  std::string command;
  Json config;
  std::uint64_t seed = 0;
  std::string hash;

  Json to_json() const;
  static RunManifest from_json(const Json& j);
};

/// Hash of the object store entry git would create for `content`:
/// sha1("blob <size>\0" + content), lowercase hex.
std::string git_blob_hash(const std::string& content);

RunManifest make_manifest(std::string command, Json config, std::uint64_t seed);

}  // namespace hjnet
