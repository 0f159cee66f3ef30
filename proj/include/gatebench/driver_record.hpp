#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gatebench/digest.hpp"
#include "gatebench/enums.hpp"

namespace gatebench {

/// Declared driver metadata. Immutable once a run starts.
struct DriverRecord {
  std::string driver_id;
  DriverType driver_type = DriverType::scripted;
  std::string driver_version;
  std::optional<std::string> model_family;
  std::optional<std::string> model_backend_id;
  std::optional<std::string> backend_engine;
  std::optional<Digest> prompt_template_hash;
  /// Provenance strings recorded only when the backend exposes them.
  std::optional<std::string> tokenizer_hash;
  std::optional<std::string> model_revision;
  std::string parser_version;
  std::uint32_t budget = 1;
  std::uint64_t seed = 0;
  std::string setting_label;
  EvidenceStatus evidence_status = EvidenceStatus::paper_facing;
  /// Controller drivers only: which single hook is enabled.
  std::optional<HookVariant> controller_variant;
  std::uint32_t retry_budget = 2;

  /// Non-LLM drivers have no separate policy version; driver_version is used.
  std::string policy_version() const { return driver_version; }

  friend bool operator==(const DriverRecord&, const DriverRecord&) = default;
};

/// Names of missing or inconsistent driver-contract fields; empty means the
/// driver is fully declared.
std::vector<std::string> driver_metadata_gaps(const DriverRecord& d);

void to_json(Json& j, const DriverRecord& d);
void from_json(const Json& j, DriverRecord& d);

}  // namespace gatebench
