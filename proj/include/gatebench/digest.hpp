#pragma once

#include <compare>
#include <string>
#include <string_view>

#include <json.hpp>

namespace gatebench {

using Json = nlohmann::json;

/// Content digest. `hex` is lowercase and has a fixed length per algorithm
/// (64 characters for sha256).
struct Digest {
  std::string algorithm;
  std::string hex;

  bool empty() const noexcept { return hex.empty(); }
  std::string str() const { return algorithm + ":" + hex; }

  /// Parses "sha256:<hex>"; throws Error("invalid_digest") on malformed input.
  static Digest parse(std::string_view text);

  friend auto operator<=>(const Digest&, const Digest&) = default;
};

inline constexpr std::string_view kDigestAlgorithm = "sha256";

/// Canonical UTF-8 serialization: object keys sorted, no whitespace,
/// shortest round-trip number formatting. Throws Error("non_canonical_value")
/// if any number is NaN or infinite.
std::string canonical_serialize(const Json& content);

Digest canonical_hash(const Json& content);
Digest canonical_hash(const nlohmann::ordered_json& content);

/// Raw sha256 over arbitrary bytes.
Digest sha256(std::string_view bytes);

void to_json(Json& j, const Digest& d);
void from_json(const Json& j, Digest& d);

}  // namespace gatebench
