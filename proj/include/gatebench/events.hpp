#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "gatebench/digest.hpp"
#include "gatebench/enums.hpp"
#include "gatebench/trace.hpp"

namespace gatebench {

inline constexpr std::string_view kSchemaVersion = "1.0.0";

struct TimingFields {
  double queue_wait_ms = 0.0;
  double service_time_ms = 0.0;
  std::optional<double> model_latency_ms;
  std::optional<double> tool_latency_ms;
  std::optional<double> verifier_latency_ms;

  friend bool operator==(const TimingFields&, const TimingFields&) = default;
};

struct ProvenanceFields {
  Digest manifest_hash;
  std::string driver_id;
  std::optional<std::string> model_backend_id;
  std::string schema_version{kSchemaVersion};
  ReplayClass replay_class = ReplayClass::R0;
  std::optional<Digest> snapshot_digest;
  std::optional<std::string> verifier_version;
  std::uint64_t seed = 0;

  friend bool operator==(const ProvenanceFields&, const ProvenanceFields&) = default;
};

/// Per-call record of one driver decision. invalid_action mirrors
/// parse_status != parsed.
struct ActionRecord {
  Digest observation_hash;
  std::optional<Digest> prompt_hash;
  std::optional<Digest> raw_output_hash;
  std::optional<Digest> parsed_action_hash;
  ParseStatus parse_status = ParseStatus::parsed;
  bool invalid_action = false;
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
  double model_latency_ms = 0.0;
  std::optional<std::string> backend_engine;
  std::optional<std::string> policy_version;

  friend bool operator==(const ActionRecord&, const ActionRecord&) = default;
};

struct EventRecord {
  std::string run_id;
  std::string episode_id;
  std::uint64_t step_index = 0;
  TraceContext trace;
  EventKind kind = EventKind::run_start;
  std::uint64_t sequence = 0;
  double wall_clock_ms = 0.0;
  TimingFields timing;
  ProvenanceFields provenance;
  Json payload = Json::object();

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

void to_json(Json& j, const TimingFields& t);
void from_json(const Json& j, TimingFields& t);
void to_json(Json& j, const ProvenanceFields& p);
void from_json(const Json& j, ProvenanceFields& p);
void to_json(Json& j, const ActionRecord& a);
void from_json(const Json& j, ActionRecord& a);
void to_json(Json& j, const EventRecord& e);
void from_json(const Json& j, EventRecord& e);

}  // namespace gatebench
