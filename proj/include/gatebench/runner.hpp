#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gatebench/drivers.hpp"
#include "gatebench/events.hpp"
#include "gatebench/manifest.hpp"
#include "gatebench/run_record.hpp"
#include "gatebench/simenv.hpp"
#include "gatebench/validator.hpp"

namespace gatebench {

/// Online policy adaptation for controller runs. Consumed samples move the
/// policy quality (the synthetic model's success bias): successes raise it,
/// samples Hook A would have dropped lower it.
struct ControllerConfig {
  HookBConfig hook_b;
  std::size_t window_capacity = 8;
  double success_gain = 0.03;
  double bad_sample_penalty = 0.04;
  double min_quality = 0.2;
  double max_quality = 0.95;
  /// Policy versions that may elapse during an episode before it is stale.
  std::uint32_t staleness_limit = 8;
};

/// Driver record plus the behaviour needed to execute it.
struct DriverSpec {
  DriverRecord record;
  std::vector<Action> script;  // scripted
  bool cyclic = true;
  CalibrationMode calibration_mode = CalibrationMode::oracle;  // calibration
  SyntheticLlmProfile profile;  // llm, sanity, controller
  ControllerConfig controller;  // controller
};

struct RunSpec {
  TaskManifest manifest;  // must be resolved
  DriverSpec driver;
  OperatingSetting setting;
  SimConfig sim;
  std::uint64_t seed = 0;  // entry seed, recorded on the driver
  std::uint32_t budget = 1;
  std::uint32_t episodes = 1;
  std::uint32_t actors = 1;
  std::uint32_t repetition = 0;
  std::size_t entry_index = 0;
  std::string release_root;
  SuiteVersions versions;
  SchemaMode schema_mode = SchemaMode::strict;
  /// Test seam: applied to each event before validation.
  std::function<void(EventRecord&)> event_mutator;
};

struct RunResult {
  RunRecord record;
  std::vector<EventRecord> events;
};

/// Seed actually used for a repetition's randomness.
std::uint64_t effective_run_seed(std::uint64_t entry_seed, std::uint32_t repetition);

/// Deterministic 16-hex-digit id of (manifest hash, driver, setting, seed,
/// budget, episodes, actors, repetition).
std::string make_run_id(const Digest& manifest_hash, const std::string& driver_id,
                        const std::string& setting_label, std::uint64_t seed, std::uint32_t budget,
                        std::uint32_t episodes, std::uint32_t actors, std::uint32_t repetition);

/// Executes one run as a discrete-event simulation over `actors` concurrent
/// episode slots sharing one verifier queue. A pure function of the spec.
/// Validator rejection aborts the run: an error event is appended and
/// trace_complete is false. Errors: "unresolved_manifest", "undeclared_driver",
/// "invalid_hooks", "invalid_budget" and the errors of init_env/freeze_run.
RunResult execute_run(const RunSpec& spec);

struct EpisodeResult {
  EpisodeSummary summary;
  std::optional<TerminalOutcome> terminal;
  std::vector<EventRecord> events;  // full single-episode run log
};

/// One episode on one manifest, wrapped in its own run.
EpisodeResult run_episode(const TaskManifest& manifest, const DriverSpec& driver,
                          const OperatingSetting& setting, std::uint64_t seed,
                          std::uint32_t budget, const SimConfig& sim = {});

/// Cumulative success fraction over the run clock, starting at (0, 0), one
/// point per terminal_result (same-time points keep the last value). The
/// denominator is run_start.planned_episodes.
std::vector<RewardPoint> build_reward_trajectory(const std::vector<EventRecord>& events);

// ------------------------------------------------------------------- plan

struct PlanEntry {
  std::string task_id;
  std::string driver;  // key into RunPlan::drivers
  SettingLabel setting = SettingLabel::clean;
  std::uint64_t seed = 0;
  std::uint32_t budget = 1;
  std::uint32_t repetitions = 1;
  std::uint32_t episodes = 1;
  std::uint32_t actors = 1;
};

struct RunPlan {
  std::string release_root;
  std::uint32_t concurrency = 1;
  SimConfig sim;
  /// Plan key "strict_schema"; permissive tolerates unknown payload fields.
  SchemaMode schema_mode = SchemaMode::permissive;
  std::map<SettingLabel, OperatingSetting> settings;
  std::map<std::string, DriverSpec> drivers;
  std::vector<PlanEntry> entries;

  OperatingSetting setting(SettingLabel label) const;
};

/// Errors: "invalid_plan", "unknown_driver_ref", "invalid_hooks".
RunPlan parse_run_plan(const Json& doc);
Json plan_to_json(const RunPlan& plan);
DriverSpec parse_driver_spec(const Json& doc);
Json driver_spec_to_json(const DriverSpec& spec);

/// Runs every (entry, repetition) on a pool of `concurrency` host threads and
/// returns results ordered by (entry, repetition); the output does not depend
/// on the pool size. A task missing from the root yields a candidate record
/// with resolution_error set instead of failing the plan.
/// Errors: "run_id_collision", "missing_release_binding" (plan names a
/// different root).
std::vector<RunResult> run_plan(const RunPlan& plan, const ReleaseRoot& root,
                                const ManifestStore& store,
                                std::optional<std::uint32_t> concurrency = std::nullopt);

}  // namespace gatebench
