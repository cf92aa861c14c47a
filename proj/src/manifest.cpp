#include "hjnet/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>
#include <stdexcept>

namespace hjnet {

namespace {

Json hashed_fields(const std::string& command, const Json& config, std::uint64_t seed) {
  return Json{{"command", command}, {"config", config}, {"seed", seed}};
}

}  // namespace

std::string git_blob_hash(const std::string& content) {
  std::string payload = "blob " + std::to_string(content.size());
  payload.push_back('\0');
  payload += content;

  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), payload.data(), payload.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw std::runtime_error("sha1 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xf]);
  }
  return hex;
}

RunManifest make_manifest(std::string command, Json config, std::uint64_t seed) {
  RunManifest m;
  m.command = std::move(command);
  m.config = std::move(config);
  m.seed = seed;
  // nlohmann::json objects keep keys sorted, so dump() is canonical
  m.hash = git_blob_hash(hashed_fields(m.command, m.config, m.seed).dump());
  return m;
}

Json RunManifest::to_json() const {
  Json j = hashed_fields(command, config, seed);
  j["manifest_hash"] = hash;
  return j;
}

RunManifest RunManifest::from_json(const Json& j) {
  RunManifest m = make_manifest(j.at("command").get<std::string>(), j.at("config"),
                                j.at("seed").get<std::uint64_t>());
  if (j.contains("manifest_hash") && j.at("manifest_hash").get<std::string>() != m.hash)
    throw std::invalid_argument("manifest hash does not match its contents");
  return m;
}

}  // namespace hjnet
