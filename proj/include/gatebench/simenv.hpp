#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gatebench/drivers.hpp"
#include "gatebench/enums.hpp"
#include "gatebench/events.hpp"
#include "gatebench/manifest.hpp"
#include "gatebench/rng.hpp"

namespace gatebench {

// Synthetic calibration constants. Orders of magnitude only; every value can
// be overridden from a run plan.
struct SimConfig {
  double micro_step_ms = 15.0;
  double web_step_ms = 75.0;
  double code_step_ms = 200.0;
  double step_latency_cv = 0.1;
  std::uint32_t micro_goal = 3;
  std::uint32_t web_goal = 5;
  std::uint32_t code_goal = 1;
  /// Evaluator/verifier service demand per submission.
  double code_verifier_ms = 180.0;
  double web_evaluator_ms = 300.0;
  double verifier_cv = 0.1;
  std::uint32_t verifier_servers = 4;
  /// Queue wait above which the evaluator gives up and no verdict is issued.
  double evaluator_timeout_ms = 1000.0;
  double retry_backoff_ms = 25.0;

  double base_step_ms(Family f) const;
  std::uint32_t default_goal(Family f) const;
  double verifier_demand_ms(Family f) const;
};

struct OperatingSetting {
  SettingLabel label = SettingLabel::clean;
  double env_latency_multiplier = 1.0;
  double tail_inflation = 1.0;  // applied to the top decile of draws
  double verifier_arrival_rate_boost = 1.0;
  double fault_injection_prob = 0.0;

  static OperatingSetting clean();
  /// Synthetic stressed preset: x3 latency, x4 top-decile tail, x2 verifier
  /// arrivals, 2% fault injection.
  static OperatingSetting medium_live_stressed();
  static OperatingSetting preset(SettingLabel label);

  /// Throws Error("invalid_setting"); clean must be the identity setting.
  void check() const;
};

struct TerminalOutcome {
  OutcomeStatus status = OutcomeStatus::failure;
  std::string evaluator_id;
  std::string detail;

  friend bool operator==(const TerminalOutcome&, const TerminalOutcome&) = default;
};

struct EnvState {
  Family family = Family::micro;
  std::string task_id;
  std::string evaluator_id;
  std::uint32_t step_count = 0;
  std::uint32_t solved_progress = 0;
  std::uint32_t goal = 1;
  std::uint32_t budget = 1;
  std::optional<TerminalOutcome> terminal;
  double sim_clock_ms = 0.0;
  /// Code family: current working-tree patch, and whether it is ready for the
  /// verifier (goal reached or budget spent).
  PatchQuality patch;
  bool awaiting_verifier = false;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

/// Per-episode RNG streams. Progress draws are separate from latency draws
/// so a replay that substitutes latencies keeps identical progress.
struct EnvRng {
  Rng progress;
  Rng latency;
  Rng faults;

  static EnvRng for_episode(std::uint64_t seed, std::uint64_t episode_index);
};

/// Goal comes from family_params.goal or the family default. Errors:
/// "unresolved_manifest", "invalid_goal", "invalid_budget". Unknown families
/// are rejected earlier, when the manifest is decoded ("unsupported_family").
EnvState init_env(const TaskManifest& manifest, const OperatingSetting& setting,
                  std::uint64_t seed, std::uint32_t budget, const SimConfig& cfg = {});

struct StepOutcome {
  TimingFields timing;
  bool progressed = false;
};

struct StepResult {
  EnvState state;
  StepOutcome outcome;
};

/// Draws one step latency: base * multiplier * lognormal(1, cv), times
/// tail_inflation on the top decile. Always consumes two draws.
double draw_step_latency(double base_ms, const OperatingSetting& setting, double cv, Rng& rng);

/// Applies one action. Errors: "stepped_after_terminal".
StepResult env_step(EnvState state, const Action& action, const OperatingSetting& setting,
                    EnvRng& rng, const SimConfig& cfg = {});

/// Step with a fixed latency and no latency draws (used by replay).
StepResult env_step_fixed_latency(EnvState state, const Action& action, Rng& progress_rng,
                                  double latency_ms);

/// Fault injection draw for one dispatch attempt.
bool draw_fault(const OperatingSetting& setting, Rng& rng);

// ------------------------------------------------------------ verifier

struct VerifierTicket {
  std::uint64_t id = 0;
  double submit_ms = 0.0;
  double demand_ms = 0.0;
  double start_ms = 0.0;
  double finish_ms = 0.0;
  double queue_wait_ms() const { return start_ms - submit_ms; }
};

/// Multi-server FIFO queue in simulated time. Submissions must arrive in
/// non-decreasing time order (the runner processes events in time order), so
/// start times can be assigned at submission.
class VerifierQueue {
 public:
  explicit VerifierQueue(std::uint32_t servers = 1);

  /// Errors: "invalid_demand" (demand <= 0), "submit_time_regression".
  std::uint64_t submit(double now_ms, double demand_ms);

  const VerifierTicket& ticket(std::uint64_t id) const;  // "unknown_ticket"
  std::uint32_t servers() const noexcept { return static_cast<std::uint32_t>(busy_until_.size()); }
  std::size_t submitted() const noexcept { return tickets_.size(); }
  /// Tickets whose service started at or before t.
  std::size_t served_by(double t_ms) const;
  /// Tickets submitted by t still waiting for a server.
  std::size_t pending_at(double t_ms) const;

 private:
  std::vector<VerifierTicket> tickets_;
  std::vector<double> busy_until_;
  double last_submit_ms_ = 0.0;
};

struct VerifierResult {
  TerminalOutcome outcome;
  double queue_wait_ms = 0.0;
  double verifier_latency_ms = 0.0;
};

/// Verdict for a patch: gold passes, noop/none fail, generated passes with
/// pass_prob from a Bernoulli seeded by decision_seed.
bool verifier_decision(const PatchQuality& patch, std::uint64_t decision_seed);

/// Errors: "unknown_ticket".
VerifierResult verifier_outcome(const VerifierQueue& queue, std::uint64_t ticket_id,
                                const PatchQuality& patch, std::uint64_t decision_seed,
                                const std::string& evaluator_id);

void to_json(Json& j, const SimConfig& c);
void from_json(const Json& j, SimConfig& c);
void to_json(Json& j, const OperatingSetting& s);
void from_json(const Json& j, OperatingSetting& s);
void to_json(Json& j, const TerminalOutcome& t);
void from_json(const Json& j, TerminalOutcome& t);

}  // namespace gatebench
