#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gatebench/driver_record.hpp"
#include "gatebench/manifest.hpp"
#include "gatebench/simenv.hpp"

namespace gatebench {

struct RewardPoint {
  double wall_clock_ms = 0.0;
  double reward = 0.0;  // cumulative success fraction of planned episodes
  friend bool operator==(const RewardPoint&, const RewardPoint&) = default;
};

struct EpisodeSummary {
  std::string episode_id;
  std::string status;  // success | failure | error | aborted
  std::uint32_t steps = 0;
  double start_ms = 0.0;
  double wall_ms = 0.0;  // episode end on the run clock
  std::uint32_t invalid_actions = 0;
  std::uint32_t retries = 0;
  bool verifier_outcome = false;
  /// Controller runs: "kept" or "dropped:<reason>" / "consumed".
  std::string sample_disposition;
  friend bool operator==(const EpisodeSummary&, const EpisodeSummary&) = default;
};

/// One workload-driver-setting run.
struct RunRecord {
  std::string run_id;
  std::string task_id;
  Family family = Family::micro;
  Digest manifest_hash;
  bool manifest_resolved = false;
  std::string resolution_error;  // e.g. "unresolved_manifest" for candidate runs
  DriverRecord driver;
  std::string setting_label;
  std::uint64_t run_seed = 0;
  std::uint32_t repetition = 0;
  std::size_t entry_index = 0;
  std::uint32_t actors = 1;
  std::uint32_t planned_episodes = 0;
  /// Session config needed to re-drive the environment.
  std::uint32_t goal = 0;
  std::string evaluator_id;
  std::string release_root;
  std::optional<FreezeRecord> freeze;
  std::string event_log_ref;
  std::optional<TerminalOutcome> terminal;
  bool trace_complete = false;
  bool invalid_sample_marker = false;
  bool retry_budget_violation = false;
  std::vector<EpisodeSummary> episode_summaries;
  std::vector<RewardPoint> reward_trajectory;
  double wall_span_ms = 0.0;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// bound, or the list of binding violations.
struct BindingStatus {
  std::vector<std::string> violations;
  bool bound() const noexcept { return violations.empty(); }
};

/// Checks a run against the active release root. Violations:
/// missing_release_binding (run bound to another or no root),
/// missing_replay_freeze, snapshot_mismatch (manifest hash not registered),
/// version_mismatch (freeze disagrees with run, or unsupported schema),
/// missing_schema_version, missing_version_metadata.
BindingStatus verify_binding(const RunRecord& run, const ReleaseRoot& root);

void to_json(Json& j, const RewardPoint& p);
void from_json(const Json& j, RewardPoint& p);
void to_json(Json& j, const EpisodeSummary& s);
void from_json(const Json& j, EpisodeSummary& s);
void to_json(Json& j, const RunRecord& r);
void from_json(const Json& j, RunRecord& r);

}  // namespace gatebench
