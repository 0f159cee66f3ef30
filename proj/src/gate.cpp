#include "gatebench/gate.hpp"

#include <algorithm>

#include "gatebench/error.hpp"
#include "gatebench/validator.hpp"

namespace gatebench {

EvidenceStratum stratify(const RunRecord& run) {
  const DriverRecord& d = run.driver;
  if (d.evidence_status == EvidenceStatus::fixture_backed ||
      d.evidence_status == EvidenceStatus::smoke_only) {
    return EvidenceStratum::non_paper_facing;
  }
  if (d.driver_type == DriverType::controller) return EvidenceStratum::decision_study;
  if (d.evidence_status == EvidenceStatus::diagnostic || d.driver_type == DriverType::sanity) {
    return EvidenceStratum::bounded_extension_or_diagnostic;
  }
  if (d.driver_type == DriverType::llm) return EvidenceStratum::llm_driver;
  return EvidenceStratum::real_task_anchor;
}

GateDecision admit(const RunRecord& run, const BindingStatus& binding) {
  GateDecision g;
  g.run_id = run.run_id;
  g.stratum = stratify(run);
  auto fail = [&](Reason r) { g.reasons.push_back(r); };

  if (!run.manifest_resolved) fail(Reason::unresolved_manifest);
  if (!driver_metadata_gaps(run.driver).empty()) fail(Reason::missing_driver_metadata);
  if (!run.trace_complete) fail(Reason::incomplete_trace);
  if (!run.terminal) fail(Reason::missing_terminal_outcome);

  for (const auto& v : binding.violations) {
    if (v == "missing_release_binding") fail(Reason::missing_release_binding);
    else if (v == "snapshot_mismatch") fail(Reason::snapshot_mismatch);
    else if (v == "version_mismatch" || v == "missing_schema_version") fail(Reason::version_mismatch);
    else fail(Reason::missing_replay_freeze);  // missing_replay_freeze, missing_version_metadata
  }
  // The binding is computed by the caller; re-check the run's own fields too.
  if (run.freeze) {
    if (run.freeze->schema_version.empty() || !is_supported_schema_version(run.freeze->schema_version)) {
      fail(Reason::version_mismatch);
    }
  } else {
    fail(Reason::missing_replay_freeze);
  }

  if (run.driver.evidence_status == EvidenceStatus::fixture_backed) fail(Reason::fixture_only_provenance);
  if (run.driver.evidence_status == EvidenceStatus::smoke_only) fail(Reason::smoke_only);
  if (run.invalid_sample_marker) fail(Reason::invalid_sample);
  if (run.retry_budget_violation) fail(Reason::retry_budget_violation);
  if (run.setting_label != "clean" && g.stratum != EvidenceStratum::decision_study) {
    fail(Reason::unsupported_stress);
  }

  std::sort(g.reasons.begin(), g.reasons.end());
  g.reasons.erase(std::unique(g.reasons.begin(), g.reasons.end()), g.reasons.end());
  if (g.reasons.empty()) {
    g.verdict = Verdict::admitted;
  } else if (g.reasons == std::vector<Reason>{Reason::incomplete_trace}) {
    g.verdict = Verdict::quarantined;
  } else {
    g.verdict = Verdict::rejected;
  }
  return g;
}

bool in_scope(GateScope scope, EvidenceStratum stratum) {
  return (stratum == EvidenceStratum::decision_study) == (scope == GateScope::decision);
}

std::vector<EvidenceStratum> planned_strata(GateScope scope) {
  if (scope == GateScope::decision) return {EvidenceStratum::decision_study};
  return {EvidenceStratum::real_task_anchor, EvidenceStratum::llm_driver,
          EvidenceStratum::bounded_extension_or_diagnostic};
}

GateReport gate_report(const std::vector<RunRecord>& runs, const std::vector<GateDecision>& decisions,
                       GateScope scope) {
  if (runs.size() != decisions.size()) {
    throw Error("decision_set_mismatch", std::to_string(runs.size()) + " runs, " +
                                             std::to_string(decisions.size()) + " decisions");
  }
  GateReport rep;
  rep.scope = scope;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const GateDecision& d = decisions[i];
    if (d.run_id != runs[i].run_id) throw Error("decision_set_mismatch", runs[i].run_id);
    if (!in_scope(scope, d.stratum)) continue;
    ++rep.indexed;
    if (!runs[i].trace_complete) ++rep.validation_failures;
    if (d.verdict == Verdict::admitted) {
      ++rep.admitted;
      ++rep.by_stratum[std::string(to_string(d.stratum))];
    } else {
      ++rep.excluded;
      for (Reason r : d.reasons) ++rep.by_reason[std::string(to_string(r))];
    }
  }
  for (EvidenceStratum s : planned_strata(scope)) {
    if (!rep.by_stratum.count(std::string(to_string(s)))) {
      rep.missing_strata.emplace_back(to_string(s));
    }
  }
  return rep;
}

void to_json(Json& j, const GateDecision& d) {
  j = Json{{"run_id", d.run_id}, {"verdict", d.verdict}, {"reasons", d.reasons}, {"stratum", d.stratum}};
}

void from_json(const Json& j, GateDecision& d) {
  d.run_id = j.at("run_id").get<std::string>();
  d.verdict = j.at("verdict").get<Verdict>();
  d.reasons = j.at("reasons").get<std::vector<Reason>>();
  d.stratum = j.at("stratum").get<EvidenceStratum>();
  if ((d.verdict == Verdict::admitted) != d.reasons.empty()) {
    throw Error("invalid_decision", d.run_id + ": verdict and reasons disagree");
  }
}

void to_json(Json& j, const GateReport& r) {
  j = Json{{"scope", r.scope},
           {"indexed", r.indexed},
           {"admitted", r.admitted},
           {"excluded", r.excluded},
           {"by_reason", r.by_reason},
           {"by_stratum", r.by_stratum},
           {"missing_strata", r.missing_strata},
           {"validation_failures", r.validation_failures}};
}

void from_json(const Json& j, GateReport& r) {
  r.scope = j.at("scope").get<GateScope>();
  r.indexed = j.at("indexed").get<std::size_t>();
  r.admitted = j.at("admitted").get<std::size_t>();
  r.excluded = j.at("excluded").get<std::size_t>();
  r.by_reason = j.at("by_reason").get<std::map<std::string, std::size_t>>();
  r.by_stratum = j.at("by_stratum").get<std::map<std::string, std::size_t>>();
  r.missing_strata = j.at("missing_strata").get<std::vector<std::string>>();
  r.validation_failures = j.at("validation_failures").get<std::size_t>();
}

}  // namespace gatebench
