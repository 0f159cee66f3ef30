#include "gatebench/validator.hpp"

#include <algorithm>
#include <cmath>

namespace gatebench {
namespace {

using Keys = std::vector<std::string_view>;

bool contains(const Keys& keys, std::string_view k) {
  return std::find(keys.begin(), keys.end(), k) != keys.end();
}

void add(ValidationReport& r, std::string code, std::string detail) {
  r.violations.push_back({std::move(code), std::move(detail)});
}

// Missing keys (and unknown ones in strict mode) for one nested object.
void check_keys(const Json& obj, const Keys& required, const Keys& optional, std::string_view where,
                SchemaMode mode, ValidationReport& r) {
  if (!obj.is_object()) {
    add(r, "missing_field", std::string(where));
    return;
  }
  for (auto k : required) {
    if (!obj.contains(k)) add(r, "missing_field", std::string(where) + "." + std::string(k));
  }
  if (mode == SchemaMode::strict) {
    for (const auto& [k, v] : obj.items()) {
      if (!contains(required, k) && !contains(optional, k)) {
        add(r, "unknown_field", std::string(where) + "." + k);
      }
    }
  }
}

bool bad_ms(double v) { return !std::isfinite(v) || v < 0.0; }
bool bad_ms(const std::optional<double>& v) { return v && bad_ms(*v); }

}  // namespace

bool ValidationReport::has(std::string_view code) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.code == code; });
}

const KindSchema& kind_schema(EventKind kind) {
  static const std::map<EventKind, KindSchema> table = {
      {EventKind::run_start, {{"setting_label", "task_id", "planned_episodes"}, {}, {}, false}},
      {EventKind::run_end, {{"episodes"}, {}, {}, false}},
      {EventKind::episode_start, {{"task_id", "episode_index"}, {}, {}, true}},
      {EventKind::episode_end, {{"status"}, {}, {}, true}},
      {EventKind::model_request_start, {{}, {"prompt_hash"}, {}, true}},
      {EventKind::model_request_end,
       {{"prompt_tokens", "completion_tokens"}, {"backend_engine"}, {"model_latency_ms"}, true}},
      {EventKind::action_parsed,
       {{"observation_hash", "parse_status", "invalid_action", "prompt_tokens", "completion_tokens",
         "model_latency_ms", "action"},
        {"prompt_hash", "raw_output_hash", "parsed_action_hash", "backend_engine", "policy_version"},
        {},
        true}},
      {EventKind::env_step_start, {{"attempt"}, {}, {}, true}},
      {EventKind::env_step_end, {{"progress"}, {}, {}, true}},
      {EventKind::tool_call, {{"tool"}, {}, {"tool_latency_ms"}, true}},
      {EventKind::verifier_outcome,
       {{"status", "evaluator_id", "ticket_id"}, {"detail", "patch_quality"}, {"verifier_latency_ms"},
        true}},
      {EventKind::retry, {{"attempt", "reason"}, {}, {}, true}},
      {EventKind::error, {{"code"}, {"detail"}, {}, false}},
      {EventKind::terminal_result, {{"status", "evaluator_id"}, {"detail"}, {}, true}},
  };
  return table.at(kind);
}

const RecordSchema& record_schema() {
  static const RecordSchema schema{
      {"run_id", "episode_id", "step_index", "trace", "kind", "sequence", "wall_clock_ms", "timing",
       "provenance", "payload"},
      {"trace_id", "span_id"},
      {"queue_wait_ms", "service_time_ms"},
      {"model_latency_ms", "tool_latency_ms", "verifier_latency_ms"},
      {"manifest_hash", "driver_id", "schema_version", "replay_class", "seed"},
      {"model_backend_id", "snapshot_digest", "verifier_version"},
  };
  return schema;
}

bool is_supported_schema_version(std::string_view version) { return version == kSchemaVersion; }

std::size_t RunValidationState::open_episodes() const {
  return static_cast<std::size_t>(std::count_if(
      episodes_.begin(), episodes_.end(), [](const auto& kv) { return kv.second.open; }));
}

ValidationReport validate_event(const EventRecord& e, RunValidationState& st) {
  ValidationReport r;
  const KindSchema& ks = kind_schema(e.kind);

  // Field presence for the typed form: empty mandatory strings count as missing.
  if (e.run_id.empty()) add(r, "missing_field", "run_id");
  if (e.provenance.driver_id.empty()) add(r, "missing_field", "provenance.driver_id");
  if (e.provenance.manifest_hash.empty()) add(r, "missing_field", "provenance.manifest_hash");
  if (e.provenance.schema_version.empty()) add(r, "missing_field", "provenance.schema_version");
  if (ks.episode_scoped && e.episode_id.empty()) add(r, "missing_field", "episode_id");
  if (e.kind != EventKind::run_start && !e.trace.parent_span_id) {
    add(r, "missing_field", "trace.parent_span_id");
  }
  if (!e.payload.is_object()) {
    add(r, "missing_field", "payload");
  } else {
    for (auto k : ks.required_payload) {
      if (!e.payload.contains(k)) add(r, "missing_field", "payload." + std::string(k));
    }
    if (st.mode() == SchemaMode::strict) {
      for (const auto& [k, v] : e.payload.items()) {
        if (!contains(ks.required_payload, k) && !contains(ks.optional_payload, k)) {
          add(r, "unknown_field", "payload." + k);
        }
      }
    }
  }
  for (auto k : ks.required_timing) {
    const bool present = (k == "model_latency_ms" && e.timing.model_latency_ms) ||
                         (k == "tool_latency_ms" && e.timing.tool_latency_ms) ||
                         (k == "verifier_latency_ms" && e.timing.verifier_latency_ms);
    if (!present) add(r, "missing_field", "timing." + std::string(k));
  }

  // Value invariants.
  if (bad_ms(e.timing.queue_wait_ms) || bad_ms(e.timing.service_time_ms) ||
      bad_ms(e.timing.model_latency_ms) || bad_ms(e.timing.tool_latency_ms) ||
      bad_ms(e.timing.verifier_latency_ms)) {
    add(r, "invalid_value", "timing");
  }
  if (bad_ms(e.wall_clock_ms)) add(r, "invalid_value", "wall_clock_ms");
  if (!e.provenance.schema_version.empty() &&
      !is_supported_schema_version(e.provenance.schema_version)) {
    add(r, "unsupported_schema_version", e.provenance.schema_version);
  }
  if (e.kind == EventKind::action_parsed && e.payload.is_object() &&
      e.payload.contains("parse_status") && e.payload.contains("invalid_action")) {
    const auto status = try_parse_enum<ParseStatus>(e.payload["parse_status"].is_string()
                                                        ? e.payload["parse_status"].get<std::string>()
                                                        : std::string());
    const auto& inv = e.payload["invalid_action"];
    if (!status || !inv.is_boolean() || inv.get<bool>() != (*status != ParseStatus::parsed)) {
      add(r, "invalid_value", "payload.invalid_action");
    }
  }

  // Ordering and trace identity.
  if (st.last_sequence_ && e.sequence <= *st.last_sequence_) {
    add(r, "sequence_order", std::to_string(e.sequence));
  }
  if (st.started_ && e.wall_clock_ms < st.last_wall_ms_) add(r, "sequence_order", "wall_clock_ms");
  if (st.started_) {
    if (e.run_id != st.run_id_) add(r, "run_mismatch", e.run_id);
    if (e.trace.trace_id != st.trace_id_) add(r, "trace_mismatch", e.trace.trace_id.hex());
  }
  if (st.spans_.count(e.trace.span_id.value)) add(r, "duplicate_span", e.trace.span_id.hex());
  if (e.trace.parent_span_id && !st.spans_.count(e.trace.parent_span_id->value)) {
    add(r, "unknown_parent", e.trace.parent_span_id->hex());
  }

  // Boundary state machine.
  auto boundary = [&](const std::string& why) { add(r, "boundary_mismatch", why); };
  RunValidationState::Episode next_ep;
  auto ep_it = st.episodes_.find(e.episode_id);
  const bool ep_known = ep_it != st.episodes_.end();
  if (ep_known) next_ep = ep_it->second;

  if (st.ended_) {
    boundary("event after run_end");
  } else if (!st.started_ && e.kind != EventKind::run_start) {
    boundary("event before run_start");
  } else {
    switch (e.kind) {
      case EventKind::run_start:
        if (st.started_) boundary("duplicate run_start");
        break;
      case EventKind::run_end:
        if (st.open_episodes() != 0) boundary("run_end with open episodes");
        break;
      case EventKind::episode_start:
        if (ep_known) {
          boundary("duplicate episode_start");
        } else {
          next_ep.open = true;
        }
        break;
      case EventKind::episode_end:
        if (!next_ep.open) {
          boundary("episode_end without episode_start");
        } else if (next_ep.model_open || next_ep.env_open) {
          boundary("episode_end inside open step");
        } else {
          next_ep.open = false;
        }
        break;
      case EventKind::model_request_start:
        if (!next_ep.open || next_ep.model_open) {
          boundary("model_request_start");
        } else {
          next_ep.model_open = true;
        }
        break;
      case EventKind::model_request_end:
        if (!next_ep.open || !next_ep.model_open) {
          boundary("model_request_end without start");
        } else {
          next_ep.model_open = false;
        }
        break;
      case EventKind::env_step_start:
        if (!next_ep.open || next_ep.env_open || next_ep.terminal) {
          boundary("env_step_start");
        } else {
          next_ep.env_open = true;
        }
        break;
      case EventKind::env_step_end:
        if (!next_ep.open || !next_ep.env_open) {
          boundary("env_step_end without env_step_start");
        } else {
          next_ep.env_open = false;
        }
        break;
      case EventKind::terminal_result:
        if (!next_ep.open || next_ep.terminal || next_ep.env_open || next_ep.model_open) {
          boundary("terminal_result");
        } else {
          next_ep.terminal = true;
        }
        break;
      case EventKind::error:
        if (!e.episode_id.empty() && !next_ep.open) boundary("error outside episode");
        break;
      case EventKind::action_parsed:
      case EventKind::tool_call:
      case EventKind::verifier_outcome:
      case EventKind::retry:
        if (!next_ep.open) boundary(std::string(to_string(e.kind)) + " outside episode");
        break;
    }
  }

  if (!r.ok()) return r;

  if (e.kind == EventKind::run_start) {
    st.started_ = true;
    st.run_id_ = e.run_id;
    st.trace_id_ = e.trace.trace_id;
  }
  if (e.kind == EventKind::run_end) st.ended_ = true;
  if (ks.episode_scoped && !e.episode_id.empty()) st.episodes_[e.episode_id] = next_ep;
  st.last_sequence_ = e.sequence;
  st.last_wall_ms_ = e.wall_clock_ms;
  st.spans_.insert(e.trace.span_id.value);
  return r;
}

ValidationReport validate_event(const Json& doc, RunValidationState& st, EventRecord* decoded) {
  ValidationReport r;
  const RecordSchema& rs = record_schema();
  if (!doc.is_object()) {
    add(r, "missing_field", "record");
    return r;
  }
  check_keys(doc, rs.top_level, {}, "record", st.mode(), r);
  if (doc.contains("trace")) {
    Keys trace_required = rs.trace;
    const bool is_start = doc.value("kind", std::string()) == "run_start";
    if (!is_start) trace_required.push_back("parent_span_id");
    check_keys(doc["trace"], trace_required, {"parent_span_id"}, "trace", st.mode(), r);
  }
  if (doc.contains("timing")) {
    check_keys(doc["timing"], rs.timing, rs.timing_optional, "timing", st.mode(), r);
  }
  if (doc.contains("provenance")) {
    check_keys(doc["provenance"], rs.provenance, rs.provenance_optional, "provenance", st.mode(), r);
  }
  if (!r.ok()) return r;

  EventRecord e;
  try {
    e = doc.get<EventRecord>();
  } catch (const std::exception& ex) {
    add(r, "invalid_value", ex.what());
    return r;
  }
  r = validate_event(e, st);
  if (r.ok() && decoded) *decoded = std::move(e);
  return r;
}

}  // namespace gatebench
