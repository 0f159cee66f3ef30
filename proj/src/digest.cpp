#include "gatebench/digest.hpp"

#include <cmath>

#include <openssl/evp.h>

#include "gatebench/error.hpp"

namespace gatebench {
namespace {

void check_finite(const Json& value) {
  switch (value.type()) {
    case Json::value_t::number_float:
      if (!std::isfinite(value.get<double>())) {
        throw Error("non_canonical_value", "non-finite number");
      }
      break;
    case Json::value_t::object:
    case Json::value_t::array:
      for (const auto& item : value) check_finite(item);
      break;
    case Json::value_t::binary:
    case Json::value_t::discarded:
      throw Error("non_canonical_value", "unsupported value type");
    default:
      break;
  }
}

bool is_lower_hex(std::string_view s) {
  for (char c : s) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

}  // namespace

Digest Digest::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw Error("invalid_digest", std::string(text));
  Digest d{std::string(text.substr(0, colon)), std::string(text.substr(colon + 1))};
  if (d.algorithm != kDigestAlgorithm || d.hex.size() != 64 || !is_lower_hex(d.hex)) {
    throw Error("invalid_digest", std::string(text));
  }
  return d;
}

std::string canonical_serialize(const Json& content) {
  check_finite(content);
  // nlohmann::json stores objects in std::map, so dump() is key-sorted.
  return content.dump(-1, ' ', false, Json::error_handler_t::strict);
}

Digest canonical_hash(const Json& content) { return sha256(canonical_serialize(content)); }

Digest canonical_hash(const nlohmann::ordered_json& content) {
  return canonical_hash(Json::parse(content.dump()));
}

Digest sha256(std::string_view bytes) {
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("hash_failure");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[out[i] >> 4]);
    hex.push_back(kHex[out[i] & 0xf]);
  }
  return Digest{std::string(kDigestAlgorithm), std::move(hex)};
}

void to_json(Json& j, const Digest& d) { j = d.empty() ? std::string() : d.str(); }

void from_json(const Json& j, Digest& d) {
  const auto s = j.get<std::string>();
  d = s.empty() ? Digest{} : Digest::parse(s);
}

}  // namespace gatebench
