#include "gatebench/events.hpp"

namespace gatebench {
namespace {

template <typename T>
void put_opt(Json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
void get_opt(const Json& j, const char* key, std::optional<T>& v) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) {
    v = it->get<T>();
  } else {
    v.reset();
  }
}

}  // namespace

void to_json(Json& j, const TimingFields& t) {
  j = Json{{"queue_wait_ms", t.queue_wait_ms}, {"service_time_ms", t.service_time_ms}};
  put_opt(j, "model_latency_ms", t.model_latency_ms);
  put_opt(j, "tool_latency_ms", t.tool_latency_ms);
  put_opt(j, "verifier_latency_ms", t.verifier_latency_ms);
}

void from_json(const Json& j, TimingFields& t) {
  t.queue_wait_ms = j.at("queue_wait_ms").get<double>();
  t.service_time_ms = j.at("service_time_ms").get<double>();
  get_opt(j, "model_latency_ms", t.model_latency_ms);
  get_opt(j, "tool_latency_ms", t.tool_latency_ms);
  get_opt(j, "verifier_latency_ms", t.verifier_latency_ms);
}

void to_json(Json& j, const ProvenanceFields& p) {
  j = Json{{"manifest_hash", p.manifest_hash},
           {"driver_id", p.driver_id},
           {"schema_version", p.schema_version},
           {"replay_class", p.replay_class},
           {"seed", p.seed}};
  put_opt(j, "model_backend_id", p.model_backend_id);
  put_opt(j, "snapshot_digest", p.snapshot_digest);
  put_opt(j, "verifier_version", p.verifier_version);
}

void from_json(const Json& j, ProvenanceFields& p) {
  p.manifest_hash = j.at("manifest_hash").get<Digest>();
  p.driver_id = j.at("driver_id").get<std::string>();
  p.schema_version = j.at("schema_version").get<std::string>();
  p.replay_class = j.at("replay_class").get<ReplayClass>();
  p.seed = j.at("seed").get<std::uint64_t>();
  get_opt(j, "model_backend_id", p.model_backend_id);
  get_opt(j, "snapshot_digest", p.snapshot_digest);
  get_opt(j, "verifier_version", p.verifier_version);
}

void to_json(Json& j, const ActionRecord& a) {
  j = Json{{"observation_hash", a.observation_hash},
           {"parse_status", a.parse_status},
           {"invalid_action", a.invalid_action},
           {"prompt_tokens", a.prompt_tokens},
           {"completion_tokens", a.completion_tokens},
           {"model_latency_ms", a.model_latency_ms}};
  put_opt(j, "prompt_hash", a.prompt_hash);
  put_opt(j, "raw_output_hash", a.raw_output_hash);
  put_opt(j, "parsed_action_hash", a.parsed_action_hash);
  put_opt(j, "backend_engine", a.backend_engine);
  put_opt(j, "policy_version", a.policy_version);
}

void from_json(const Json& j, ActionRecord& a) {
  a.observation_hash = j.at("observation_hash").get<Digest>();
  a.parse_status = j.at("parse_status").get<ParseStatus>();
  a.invalid_action = j.at("invalid_action").get<bool>();
  a.prompt_tokens = j.at("prompt_tokens").get<std::uint64_t>();
  a.completion_tokens = j.at("completion_tokens").get<std::uint64_t>();
  a.model_latency_ms = j.at("model_latency_ms").get<double>();
  get_opt(j, "prompt_hash", a.prompt_hash);
  get_opt(j, "raw_output_hash", a.raw_output_hash);
  get_opt(j, "parsed_action_hash", a.parsed_action_hash);
  get_opt(j, "backend_engine", a.backend_engine);
  get_opt(j, "policy_version", a.policy_version);
}

void to_json(Json& j, const EventRecord& e) {
  j = Json{{"run_id", e.run_id},
           {"episode_id", e.episode_id},
           {"step_index", e.step_index},
           {"trace", e.trace},
           {"kind", e.kind},
           {"sequence", e.sequence},
           {"wall_clock_ms", e.wall_clock_ms},
           {"timing", e.timing},
           {"provenance", e.provenance},
           {"payload", e.payload}};
}

void from_json(const Json& j, EventRecord& e) {
  e.run_id = j.at("run_id").get<std::string>();
  e.episode_id = j.at("episode_id").get<std::string>();
  e.step_index = j.at("step_index").get<std::uint64_t>();
  e.trace = j.at("trace").get<TraceContext>();
  e.kind = j.at("kind").get<EventKind>();
  e.sequence = j.at("sequence").get<std::uint64_t>();
  e.wall_clock_ms = j.at("wall_clock_ms").get<double>();
  e.timing = j.at("timing").get<TimingFields>();
  e.provenance = j.at("provenance").get<ProvenanceFields>();
  e.payload = j.at("payload");
}

}  // namespace gatebench
