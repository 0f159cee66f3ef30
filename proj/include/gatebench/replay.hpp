#pragma once

#include <string>
#include <vector>

#include "gatebench/events.hpp"
#include "gatebench/run_record.hpp"

namespace gatebench {

inline constexpr std::string_view kReplayHarnessVersion = "0.1.0";
inline constexpr double kReplayStepCostMs = 1.0;

/// Frozen material per class:
///   R0: {"aggregates", "summary"}
///   R1: {"events", "evaluator_freeze", "session", "freeze"}
///   R2: {"manifest", "snapshot_digest", "verifier_freeze", "episodes", "freeze"}
struct ReplayBundle {
  std::string run_id;
  ReplayClass replay_class = ReplayClass::R0;
  std::string harness_version{kReplayHarnessVersion};
  Json material = Json::object();
  friend bool operator==(const ReplayBundle&, const ReplayBundle&) = default;
};

struct EpisodeReplay {
  std::string episode_id;
  std::string recorded_status;  // from terminal_result, or "none"
  std::string replayed_status;
  bool match = false;
  friend bool operator==(const EpisodeReplay&, const EpisodeReplay&) = default;
};

struct ReplayResult {
  std::string run_id;
  ReplayClass replay_class = ReplayClass::R0;
  bool terminal_match = false;  // every episode matched
  std::vector<EpisodeReplay> episodes;
  std::vector<double> live_step_latency_ms;
  std::vector<double> per_step_latency_ms;  // replay
  double live_mean_ms = 0.0;
  double replay_mean_ms = 0.0;
  double reduction = 0.0;
  friend bool operator==(const ReplayResult&, const ReplayResult&) = default;
};

/// Class follows the run's family. Errors: "missing_replay_freeze",
/// "unresolved_manifest" (R2 without the manifest).
ReplayBundle build_bundle(const RunRecord& run, const std::vector<EventRecord>& events,
                          const TaskManifest* manifest = nullptr);

/// R0 recomputes the summary; R1 re-drives recorded actions at a fixed step
/// cost with faults stripped and re-evaluates terminals; R2 re-runs the
/// verifier decision from the frozen patch and seed. Errors:
/// "replay_version_mismatch", "replay_summary_mismatch", "malformed_bundle".
ReplayResult replay_run(const ReplayBundle& bundle);

void to_json(Json& j, const ReplayBundle& b);
void from_json(const Json& j, ReplayBundle& b);
void to_json(Json& j, const EpisodeReplay& e);
void from_json(const Json& j, EpisodeReplay& e);
void to_json(Json& j, const ReplayResult& r);
void from_json(const Json& j, ReplayResult& r);

}  // namespace gatebench
