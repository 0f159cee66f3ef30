#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gatebench/events.hpp"

namespace gatebench {

struct Violation {
  std::string code;  // sequence_order, missing_field, boundary_mismatch, ...
  std::string detail;
  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  bool has(std::string_view code) const;
  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

/// Strict rejects unknown keys anywhere in a record; permissive keeps them.
enum class SchemaMode { strict, permissive };

/// Closed per-kind field lists.
struct KindSchema {
  std::vector<std::string_view> required_payload;
  std::vector<std::string_view> optional_payload;
  std::vector<std::string_view> required_timing;
  bool episode_scoped = true;
};

const KindSchema& kind_schema(EventKind kind);

/// Top-level and nested keys required on every event. parent_span_id is
/// required on every kind except run_start.
struct RecordSchema {
  std::vector<std::string_view> top_level;
  std::vector<std::string_view> trace;
  std::vector<std::string_view> timing;
  std::vector<std::string_view> timing_optional;
  std::vector<std::string_view> provenance;
  std::vector<std::string_view> provenance_optional;
};
const RecordSchema& record_schema();

bool is_supported_schema_version(std::string_view version);

/// Per-run boundary state. Confined to one thread; different runs are
/// validated with different states.
class RunValidationState {
 public:
  explicit RunValidationState(SchemaMode mode = SchemaMode::strict) : mode_(mode) {}

  SchemaMode mode() const noexcept { return mode_; }
  bool started() const noexcept { return started_; }
  bool ended() const noexcept { return ended_; }
  std::size_t open_episodes() const;

 private:
  friend ValidationReport validate_event(const EventRecord&, RunValidationState&);

  struct Episode {
    bool open = false;
    bool model_open = false;
    bool env_open = false;
    bool terminal = false;
  };

  SchemaMode mode_;
  bool started_ = false;
  bool ended_ = false;
  std::string run_id_;
  TraceId trace_id_;
  std::optional<std::uint64_t> last_sequence_;
  double last_wall_ms_ = 0.0;
  std::set<std::uint64_t> spans_;
  std::map<std::string, Episode> episodes_;
};

/// Checks type invariants and boundary legality; advances `state` only when
/// the report is ok.
ValidationReport validate_event(const EventRecord& record, RunValidationState& state);

/// Document-level entry point: reports missing/unknown keys before decoding,
/// then runs the typed checks. On ok, `decoded` (if given) receives the record.
ValidationReport validate_event(const Json& doc, RunValidationState& state,
                                EventRecord* decoded = nullptr);

}  // namespace gatebench
