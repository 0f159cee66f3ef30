#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "gatebench/driver_record.hpp"
#include "gatebench/events.hpp"
#include "gatebench/manifest.hpp"
#include "gatebench/rng.hpp"

namespace gatebench {

enum class PatchKind { none, gold, noop, generated };
GATEBENCH_ENUM_NAMES(PatchKind, {PatchKind::none, "none"}, {PatchKind::gold, "gold"},
                     {PatchKind::noop, "noop"}, {PatchKind::generated, "generated"});

/// Patch handed to the code-family verifier. `pass_prob` is only read for
/// generated patches.
struct PatchQuality {
  PatchKind kind = PatchKind::none;
  double pass_prob = 0.0;

  static PatchQuality gold() { return {PatchKind::gold, 1.0}; }
  static PatchQuality noop() { return {PatchKind::noop, 0.0}; }
  static PatchQuality generated(double p) { return {PatchKind::generated, p}; }

  friend bool operator==(const PatchQuality&, const PatchQuality&) = default;
};

enum class ActionEffect { attempt, noop, invalid };
GATEBENCH_ENUM_NAMES(ActionEffect, {ActionEffect::attempt, "attempt"}, {ActionEffect::noop, "noop"},
                     {ActionEffect::invalid, "invalid"});

/// What the environment receives. An `attempt` advances task progress with
/// probability `advance_prob`; on the code family it also writes `patch`
/// into the working tree.
struct Action {
  std::string name;
  ActionEffect effect = ActionEffect::attempt;
  double advance_prob = 1.0;
  PatchQuality patch;

  static Action noop() { return Action{"noop", ActionEffect::noop, 0.0, {}}; }

  friend bool operator==(const Action&, const Action&) = default;
};

/// What a driver sees before choosing an action.
struct Observation {
  std::string task_id;
  Family family = Family::micro;
  std::uint32_t step = 0;
  std::uint32_t progress = 0;
  std::uint32_t goal = 1;
};

Digest observation_hash(const Observation& obs);

// ---------------------------------------------------------------- scripted

/// Returns script[step mod len] (cyclic) or script[step]. Errors:
/// "empty_script", "script_exhausted" (non-cyclic, step past the end).
std::pair<ActionRecord, Action> scripted_next_action(const Observation& obs,
                                                     std::span<const Action> script,
                                                     std::uint32_t step, bool cyclic = true);

// ------------------------------------------------------------- calibration

enum class CalibrationMode { oracle, noop };
GATEBENCH_ENUM_NAMES(CalibrationMode, {CalibrationMode::oracle, "oracle"},
                     {CalibrationMode::noop, "noop"});

/// oracle: the solving action (gold patch on the code family). noop: the
/// identity action. A manifest may set family_params.oracle_available=false,
/// in which case oracle mode throws Error("no_oracle").
Action calibration_action(CalibrationMode mode, const TaskManifest& task);

// ----------------------------------------------------------- synthetic LLM

struct SyntheticLlmProfile {
  double mean_model_latency_ms = 120.0;
  double latency_cv = 0.3;
  double invalid_action_prob = 0.05;
  double mean_prompt_tokens = 900.0;
  double mean_completion_tokens = 60.0;
  double success_bias = 0.7;

  /// Throws Error("invalid_profile") on out-of-range values.
  void check() const;
};

struct LlmCallContext {
  std::optional<std::string> backend_engine;
  std::optional<std::string> policy_version;
  std::optional<Digest> prompt_template_hash;
};

/// One simulated model call. All randomness comes from `rng`, so a driver
/// seeded from DriverRecord.seed replays the same ActionRecord sequence.
std::pair<ActionRecord, Action> synthetic_llm_call(const Observation& obs,
                                                   const SyntheticLlmProfile& profile, Rng& rng,
                                                   const LlmCallContext& ctx = {});

/// Stateful wrapper: owns the RNG and counts calls.
class SyntheticLlmDriver {
 public:
  SyntheticLlmDriver(SyntheticLlmProfile profile, std::uint64_t seed, LlmCallContext ctx = {});

  std::pair<ActionRecord, Action> call(const Observation& obs);
  std::uint64_t calls() const noexcept { return calls_; }

 private:
  SyntheticLlmProfile profile_;
  Rng rng_;
  LlmCallContext ctx_;
  std::uint64_t calls_ = 0;
};

/// ActionRecord for a non-model driver decision (scripted, calibration).
ActionRecord deterministic_action_record(const Observation& obs, const Action& action,
                                         const std::string& policy_version);

// ------------------------------------------------------------------ hooks

struct SampleMeta {
  bool has_terminal_outcome = true;
  bool invalid_sample_marker = false;
  bool version_fields_present = true;
  bool version_mismatch = false;
  bool snapshot_mismatch = false;
  std::uint32_t retry_count = 0;
  std::uint32_t retry_budget = 0;
};

enum class DropReason { missing_terminal, invalid_sample, version_snapshot_mismatch, retry_budget_exceeded };
GATEBENCH_ENUM_NAMES(DropReason, {DropReason::missing_terminal, "missing_terminal"},
                     {DropReason::invalid_sample, "invalid_sample"},
                     {DropReason::version_snapshot_mismatch, "version_snapshot_mismatch"},
                     {DropReason::retry_budget_exceeded, "retry_budget_exceeded"});

/// Hook A: sample-validity and staleness filter. Returns nullopt to keep,
/// otherwise the first failing reason in declaration order of DropReason.
std::optional<DropReason> hook_a_filter(const SampleMeta& sample);

struct TelemetrySample {
  double wall_clock_ms = 0.0;
  std::uint32_t verifier_queue_depth = 0;
  double verifier_queue_wait_ms = 0.0;
};

/// Rolling window of verifier telemetry; holds at most `capacity` samples
/// with non-decreasing timestamps.
class TelemetryWindow {
 public:
  explicit TelemetryWindow(std::size_t capacity);

  /// Throws Error("window_time_regression") if ts goes backwards.
  void push(const TelemetrySample& sample);
  const std::deque<TelemetrySample>& samples() const noexcept { return window_; }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return window_.empty(); }
  double mean_queue_wait_ms() const;

 private:
  std::size_t capacity_;
  std::deque<TelemetrySample> window_;
};

struct HookBConfig {
  double pressure_threshold_ms = 50.0;
  std::uint32_t min_conc = 1;
  std::uint32_t max_conc = 8;
  std::uint32_t step = 1;
};

/// Hook B: adaptive concurrency. Shrinks by `step` when mean queue wait
/// exceeds the threshold, grows by `step` below half of it, otherwise holds.
/// An empty window holds. Result is clamped to [min_conc, max_conc].
std::uint32_t hook_b_adjust(const TelemetryWindow& window, const HookBConfig& cfg,
                            std::uint32_t current_conc);

void to_json(Json& j, const PatchQuality& p);
void from_json(const Json& j, PatchQuality& p);
void to_json(Json& j, const Action& a);
void from_json(const Json& j, Action& a);
void to_json(Json& j, const Observation& o);
void to_json(Json& j, const SyntheticLlmProfile& p);
void from_json(const Json& j, SyntheticLlmProfile& p);
void to_json(Json& j, const HookBConfig& c);
void from_json(const Json& j, HookBConfig& c);

}  // namespace gatebench
