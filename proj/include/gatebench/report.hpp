#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gatebench/events.hpp"
#include "gatebench/gate.hpp"
#include "gatebench/run_record.hpp"

namespace gatebench {

/// Runs (with their logs) whose gate verdict is admitted. Adding anything
/// else is refused, so every report below consumes admitted rows only.
class AdmittedSet {
 public:
  struct Row {
    RunRecord run;
    std::vector<EventRecord> events;
  };

  /// Errors: "unadmitted_run" (verdict is not admitted),
  /// "decision_set_mismatch" (decision is for another run).
  void add(RunRecord run, std::vector<EventRecord> events, const GateDecision& decision);

  /// Keeps admitted rows of `scope`; decisions must pair with runs by index.
  static AdmittedSet from(const std::vector<RunRecord>& runs,
                          const std::vector<std::vector<EventRecord>>& events,
                          const std::vector<GateDecision>& decisions, GateScope scope);

  const std::vector<Row>& rows() const noexcept { return rows_; }
  bool empty() const noexcept { return rows_.empty(); }

 private:
  std::vector<Row> rows_;
};

// ----------------------------------------------------------------- latency

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value (1-based),
/// and the minimum for p = 0. Errors: "empty_sample", "invalid_percentile".
double nearest_rank(std::vector<double> values, double p);

struct LatencyBreakdown {
  Family family = Family::micro;
  std::uint32_t concurrency = 1;
  std::size_t count = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double p99_ms = 0.0;
  double mean_queue_wait_ms = 0.0;
  double throughput_eps = 0.0;
  std::size_t completed_episodes = 0;
  friend bool operator==(const LatencyBreakdown&, const LatencyBreakdown&) = default;
};

/// Groups by family x simulated concurrency (actors). Samples are env-step
/// service times; queue wait averages verifier outcomes; throughput is
/// episodes with a terminal result over the longest run span in the group.
/// Empty groups are omitted.
std::vector<LatencyBreakdown> latency_decomposition(const AdmittedSet& admitted);

struct InvalidActionStats {
  std::size_t total = 0;
  std::size_t invalid = 0;
  double rate = 0.0;
  std::map<std::string, std::size_t> parse_status;
  friend bool operator==(const InvalidActionStats&, const InvalidActionStats&) = default;
};

/// Errors: "no_actions".
InvalidActionStats invalid_action_rate(const std::vector<EventRecord>& events);
InvalidActionStats invalid_action_rate(const AdmittedSet& admitted);

// --------------------------------------------------------------------- AUC

/// Left-continuous step integral of reward over [0, horizon] divided by
/// horizon. Errors: "nonmonotone_trajectory", "invalid_trajectory" (empty or
/// not starting at t=0), "invalid_horizon" (<= 0 or before the last point).
double reward_auc(const std::vector<RewardPoint>& trajectory, double horizon_ms);

// ---------------------------------------------------------- decision study

struct DecisionCell {
  std::string backend;
  std::uint64_t seed = 0;
  std::uint32_t budget = 0;
  std::string setting;
  std::map<std::string, double> auc_by_variant;
  std::optional<std::string> selected;  // nullopt: incomparable
  friend bool operator==(const DecisionCell&, const DecisionCell&) = default;
};

struct DecisionStudyReport {
  std::vector<DecisionCell> cells;
  std::size_t admitted = 0;
  std::size_t blocked = 0;
  std::size_t comparable_cells = 0;
  std::size_t reversal_cells = 0;
  friend bool operator==(const DecisionStudyReport&, const DecisionStudyReport&) = default;
};

/// argmax; ties go to the lexicographically smallest variant label.
std::string select_variant(const std::map<std::string, double>& auc_by_variant);

/// Lower-level form over precomputed cells: fills `selected` (both variants
/// required) and counts reversals over (backend, seed, budget) groups that
/// hold a comparable clean and medium cell.
DecisionStudyReport decision_study(std::vector<DecisionCell> cells, std::size_t admitted,
                                   std::size_t blocked);

/// From admitted decision-study rows. Each cell's horizon is the longest
/// run span among its variants. `blocked` counts decision-study runs the gate
/// did not admit.
DecisionStudyReport decision_study(const AdmittedSet& admitted, std::size_t blocked);

// ------------------------------------------------------------ claim matrix

enum class ClaimStatus { supported, supported_bounded, caveated, appendix_only, not_claimed };
GATEBENCH_ENUM_NAMES(ClaimStatus, {ClaimStatus::supported, "supported"},
                     {ClaimStatus::supported_bounded, "supported_bounded"},
                     {ClaimStatus::caveated, "caveated"},
                     {ClaimStatus::appendix_only, "appendix_only"},
                     {ClaimStatus::not_claimed, "not_claimed"});

struct ClaimRow {
  std::string claim;
  ClaimStatus status = ClaimStatus::not_claimed;
  std::size_t rows_used = 0;
  std::string scope;
  friend bool operator==(const ClaimRow&, const ClaimRow&) = default;
};

struct ClaimMatrix {
  std::vector<ClaimRow> rows;
  friend bool operator==(const ClaimMatrix&, const ClaimMatrix&) = default;
};

struct ClaimDiagnostics {
  /// Replay of admitted rows; reduction is pooled over all replayed steps.
  std::size_t replay_episodes = 0;
  std::size_t replay_matches = 0;
  double replay_reduction = 0.0;
  /// Code-family calibration controls.
  std::size_t gold_runs = 0;
  std::size_t gold_pass = 0;
  std::size_t noop_runs = 0;
  std::size_t noop_fail = 0;
};

struct ClaimConfig {
  std::vector<std::string> claims{"evidence_admission", "llm_driver_traffic", "verifier_calibration",
                                  "replay_behavior",    "controller_decision", "controller_universality"};
  double replay_reduction = 0.99;
};

/// Errors: "unknown_claim".
ClaimMatrix claim_matrix(const GateReport& gate, const DecisionStudyReport& study,
                         const ClaimDiagnostics& diagnostics, const ClaimConfig& config = {});

// ------------------------------------------------------------ text tables

std::string format_decision_table(const DecisionStudyReport& study);
std::string format_admission_audit(const GateReport& canonical, const GateReport& decision);
std::string format_latency_table(const std::vector<LatencyBreakdown>& rows);
std::string format_claim_matrix(const ClaimMatrix& matrix);

void to_json(Json& j, const LatencyBreakdown& l);
void to_json(Json& j, const InvalidActionStats& s);
void to_json(Json& j, const DecisionCell& c);
void from_json(const Json& j, DecisionCell& c);
void to_json(Json& j, const DecisionStudyReport& r);
void from_json(const Json& j, DecisionStudyReport& r);
void to_json(Json& j, const ClaimRow& r);
void to_json(Json& j, const ClaimMatrix& m);
void to_json(Json& j, const ClaimDiagnostics& d);

}  // namespace gatebench
