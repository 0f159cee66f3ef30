#pragma once

#include <map>
#include <string>
#include <vector>

#include "gatebench/run_record.hpp"

namespace gatebench {

enum class Verdict { admitted, rejected, quarantined };
GATEBENCH_ENUM_NAMES(Verdict, {Verdict::admitted, "admitted"}, {Verdict::rejected, "rejected"},
                     {Verdict::quarantined, "quarantined"});

enum class Reason {
  missing_terminal_outcome,
  invalid_sample,
  version_mismatch,
  snapshot_mismatch,
  retry_budget_violation,
  fixture_only_provenance,
  missing_driver_metadata,
  incomplete_trace,
  unresolved_manifest,
  smoke_only,
  missing_replay_freeze,
  missing_release_binding,
  unsupported_stress,
};
GATEBENCH_ENUM_NAMES(Reason, {Reason::missing_terminal_outcome, "missing_terminal_outcome"},
                     {Reason::invalid_sample, "invalid_sample"},
                     {Reason::version_mismatch, "version_mismatch"},
                     {Reason::snapshot_mismatch, "snapshot_mismatch"},
                     {Reason::retry_budget_violation, "retry_budget_violation"},
                     {Reason::fixture_only_provenance, "fixture_only_provenance"},
                     {Reason::missing_driver_metadata, "missing_driver_metadata"},
                     {Reason::incomplete_trace, "incomplete_trace"},
                     {Reason::unresolved_manifest, "unresolved_manifest"},
                     {Reason::smoke_only, "smoke_only"},
                     {Reason::missing_replay_freeze, "missing_replay_freeze"},
                     {Reason::missing_release_binding, "missing_release_binding"},
                     {Reason::unsupported_stress, "unsupported_stress"});

enum class EvidenceStratum {
  real_task_anchor,
  llm_driver,
  bounded_extension_or_diagnostic,
  decision_study,
  non_paper_facing,
};
GATEBENCH_ENUM_NAMES(EvidenceStratum, {EvidenceStratum::real_task_anchor, "real_task_anchor"},
                     {EvidenceStratum::llm_driver, "llm_driver"},
                     {EvidenceStratum::bounded_extension_or_diagnostic,
                      "bounded_extension_or_diagnostic"},
                     {EvidenceStratum::decision_study, "decision_study"},
                     {EvidenceStratum::non_paper_facing, "non_paper_facing"});

struct GateDecision {
  std::string run_id;
  Verdict verdict = Verdict::rejected;
  std::vector<Reason> reasons;  // sorted, unique
  EvidenceStratum stratum = EvidenceStratum::non_paper_facing;
  friend bool operator==(const GateDecision&, const GateDecision&) = default;
};

/// fixture/smoke first, then controller, diagnostic/sanity, llm, and
/// paper-facing scripted/calibration.
EvidenceStratum stratify(const RunRecord& run);

/// Every failed condition is recorded. Quarantine only when incomplete_trace
/// is the sole reason. Stressed rows outside the decision study are rejected
/// with unsupported_stress.
GateDecision admit(const RunRecord& run, const BindingStatus& binding);

/// Canonical reports exclude decision-study rows; decision reports contain
/// only them.
enum class GateScope { canonical, decision };
GATEBENCH_ENUM_NAMES(GateScope, {GateScope::canonical, "canonical"}, {GateScope::decision, "decision"});

bool in_scope(GateScope scope, EvidenceStratum stratum);

struct GateReport {
  GateScope scope = GateScope::canonical;
  std::size_t indexed = 0;
  std::size_t admitted = 0;
  std::size_t excluded = 0;
  std::map<std::string, std::size_t> by_reason;
  std::map<std::string, std::size_t> by_stratum;  // admitted rows
  std::vector<std::string> missing_strata;
  std::size_t validation_failures = 0;
  friend bool operator==(const GateReport&, const GateReport&) = default;
};

/// Strata a scope expects to populate.
std::vector<EvidenceStratum> planned_strata(GateScope scope);

/// Requires exactly one decision per run, matched by run_id in order.
/// Errors: "decision_set_mismatch".
GateReport gate_report(const std::vector<RunRecord>& runs, const std::vector<GateDecision>& decisions,
                       GateScope scope = GateScope::canonical);

void to_json(Json& j, const GateDecision& d);
void from_json(const Json& j, GateDecision& d);
void to_json(Json& j, const GateReport& r);
void from_json(const Json& j, GateReport& r);

}  // namespace gatebench
