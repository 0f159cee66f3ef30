#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "common.hpp"

using namespace gatebench;
using namespace gbtest;

namespace {

const RunRecord& base_run() {
  static const RunRecord r = admissible_run().record;
  return r;
}

GateDecision decide(const RunRecord& r) { return admit(r, verify_binding(r, demo_release_root())); }

RunRecord as_llm(RunRecord r) {
  r.driver.driver_type = DriverType::llm;
  r.driver.model_family = "synthetic-chat";
  r.driver.backend_engine = "vllm";
  return r;
}

RunRecord as_controller(RunRecord r) {
  r.driver.driver_type = DriverType::controller;
  r.driver.model_family = "synthetic-chat";
  r.driver.backend_engine = "vllm";
  r.driver.controller_variant = HookVariant::hook_a_only;
  return r;
}

struct Negation {
  const char* name;
  Reason reason;
  std::function<void(RunRecord&)> apply;
};

const std::vector<Negation>& negations() {
  static const std::vector<Negation> n = {
      {"resolved manifest", Reason::unresolved_manifest, [](RunRecord& r) { r.manifest_resolved = false; }},
      {"driver metadata", Reason::missing_driver_metadata, [](RunRecord& r) { r.driver.parser_version.clear(); }},
      {"trace complete", Reason::incomplete_trace, [](RunRecord& r) { r.trace_complete = false; }},
      {"terminal outcome", Reason::missing_terminal_outcome, [](RunRecord& r) { r.terminal.reset(); }},
      {"release binding", Reason::missing_release_binding, [](RunRecord& r) { r.release_root = "other"; }},
      {"schema version", Reason::version_mismatch, [](RunRecord& r) { r.freeze->schema_version.clear(); }},
      {"replay freeze", Reason::missing_replay_freeze, [](RunRecord& r) { r.freeze.reset(); }},
      {"not fixture", Reason::fixture_only_provenance,
       [](RunRecord& r) { r.driver.evidence_status = EvidenceStatus::fixture_backed; }},
      {"not smoke", Reason::smoke_only, [](RunRecord& r) { r.driver.evidence_status = EvidenceStatus::smoke_only; }},
  };
  return n;
}

}  // namespace

// ------------------------------------------------------------------ admit

TEST(Admit, BoundSuccessfulRunIsAdmitted) {
  const GateDecision d = decide(base_run());
  EXPECT_EQ(d.verdict, Verdict::admitted);
  EXPECT_TRUE(d.reasons.empty());
  EXPECT_EQ(d.run_id, base_run().run_id);
  EXPECT_EQ(d.stratum, EvidenceStratum::real_task_anchor);
}

TEST(Admit, SingleConditionSensitivity) {
  for (const auto& n : negations()) {
    RunRecord r = base_run();
    n.apply(r);
    const GateDecision d = decide(r);
    EXPECT_EQ(d.reasons, std::vector<Reason>{n.reason}) << n.name;
    const Verdict expected = n.reason == Reason::incomplete_trace ? Verdict::quarantined : Verdict::rejected;
    EXPECT_EQ(d.verdict, expected) << n.name;
  }
}

TEST(Admit, MissingTerminalResultEventInLog) {
  RunSpec spec = run_spec("web-form", scripted_driver({"fill", "submit"}), 1);
  spec.event_mutator = [](EventRecord& e) {
    if (e.kind == EventKind::terminal_result) e.kind = EventKind::tool_call;
  };
  const GateDecision d = decide(execute_run(spec).record);
  EXPECT_NE(d.verdict, Verdict::admitted);
  EXPECT_TRUE(std::count(d.reasons.begin(), d.reasons.end(), Reason::missing_terminal_outcome));
}

TEST(Admit, MultipleFailuresAreAllRecorded) {
  RunRecord r = base_run();
  r.trace_complete = false;
  r.terminal.reset();
  r.driver.evidence_status = EvidenceStatus::fixture_backed;
  const GateDecision d = decide(r);
  EXPECT_EQ(d.verdict, Verdict::rejected);
  const std::vector<Reason> expected = {Reason::missing_terminal_outcome, Reason::fixture_only_provenance,
                                        Reason::incomplete_trace};
  std::vector<Reason> sorted = expected;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(d.reasons, sorted);
}

TEST(Admit, ExtraFlagsAndStress) {
  RunRecord r = base_run();
  r.invalid_sample_marker = true;
  EXPECT_EQ(decide(r).reasons, std::vector<Reason>{Reason::invalid_sample});
  r = base_run();
  r.retry_budget_violation = true;
  EXPECT_EQ(decide(r).reasons, std::vector<Reason>{Reason::retry_budget_violation});
  r = base_run();
  r.setting_label = "medium_live_stressed";
  EXPECT_EQ(decide(r).reasons, std::vector<Reason>{Reason::unsupported_stress});
  r = as_controller(base_run());
  r.setting_label = "medium_live_stressed";
  EXPECT_EQ(decide(r).verdict, Verdict::admitted);
  r = base_run();
  r.freeze->manifest_hash = sha256("elsewhere");
  const auto reasons = decide(r).reasons;
  EXPECT_TRUE(std::count(reasons.begin(), reasons.end(), Reason::snapshot_mismatch));
}

TEST(Admit, VerdictReasonInvariantOnRandomMutations) {
  Rng rng(99);
  for (int i = 0; i < 500; ++i) {
    RunRecord r = base_run();
    for (const auto& n : negations())
      if (rng.uniform() < 0.2) n.apply(r);
    const GateDecision d = decide(r);
    EXPECT_EQ(d.verdict == Verdict::admitted, d.reasons.empty());
    EXPECT_TRUE(std::is_sorted(d.reasons.begin(), d.reasons.end()));
    EXPECT_EQ(std::adjacent_find(d.reasons.begin(), d.reasons.end()), d.reasons.end());
  }
}

TEST(GateDecisionJson, RejectsInconsistentVerdict) {
  Json doc = decide(base_run());
  EXPECT_EQ(doc.get<GateDecision>(), decide(base_run()));
  doc["reasons"] = {"smoke_only"};
  EXPECT_THROW(doc.get<GateDecision>(), Error);
}

// --------------------------------------------------------------- stratify

TEST(Stratify, Mapping) {
  EXPECT_EQ(stratify(base_run()), EvidenceStratum::real_task_anchor);
  RunRecord calib = base_run();
  calib.driver.driver_type = DriverType::calibration;
  EXPECT_EQ(stratify(calib), EvidenceStratum::real_task_anchor);
  EXPECT_EQ(stratify(as_llm(base_run())), EvidenceStratum::llm_driver);
  EXPECT_EQ(stratify(as_controller(base_run())), EvidenceStratum::decision_study);
  RunRecord diag = base_run();
  diag.driver.evidence_status = EvidenceStatus::diagnostic;
  EXPECT_EQ(stratify(diag), EvidenceStratum::bounded_extension_or_diagnostic);
  RunRecord sanity = base_run();
  sanity.driver.driver_type = DriverType::sanity;
  EXPECT_EQ(stratify(sanity), EvidenceStratum::bounded_extension_or_diagnostic);
  for (auto s : {EvidenceStatus::fixture_backed, EvidenceStatus::smoke_only}) {
    RunRecord r = as_controller(base_run());
    r.driver.evidence_status = s;
    EXPECT_EQ(stratify(r), EvidenceStratum::non_paper_facing);
  }
}

// ----------------------------------------------------------------- report

TEST(GateReport, ThreeAdmittedTwoRejected) {
  std::vector<RunRecord> runs(5, base_run());
  runs[3].terminal.reset();
  runs[4].manifest_resolved = false;
  std::vector<GateDecision> ds;
  for (const auto& r : runs) ds.push_back(decide(r));
  const GateReport rep = gate_report(runs, ds);
  EXPECT_EQ(rep.indexed, 5u);
  EXPECT_EQ(rep.admitted, 3u);
  EXPECT_EQ(rep.excluded, 2u);
  EXPECT_EQ(rep.by_stratum.at("real_task_anchor"), 3u);
  EXPECT_EQ(rep.missing_strata, (std::vector<std::string>{"llm_driver", "bounded_extension_or_diagnostic"}));
}

TEST(GateReport, AllFixtureBacked) {
  std::vector<RunRecord> runs(6, base_run());
  std::vector<GateDecision> ds;
  for (auto& r : runs) {
    r.driver.evidence_status = EvidenceStatus::fixture_backed;
    ds.push_back(decide(r));
  }
  const GateReport rep = gate_report(runs, ds);
  EXPECT_EQ(rep.by_reason.at("fixture_only_provenance"), rep.indexed);
  EXPECT_EQ(rep.admitted, 0u);
}

TEST(GateReport, DecisionSetMismatch) {
  std::vector<RunRecord> runs(2, base_run());
  runs[1].run_id = "other";
  std::vector<GateDecision> ds = {decide(runs[0])};
  EXPECT_THROW(gate_report(runs, ds), Error);
  ds.push_back(decide(runs[0]));
  try {
    gate_report(runs, ds);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "decision_set_mismatch");
  }
}

namespace {

struct MixedFixture {
  std::vector<RunRecord> runs;
  std::vector<std::set<Reason>> expected_reasons;
  std::vector<EvidenceStratum> expected_strata;
};

// 40 runs with hand-assigned faults. Expected reasons and strata come from the
// construction, not from admit().
MixedFixture mixed_fixture() {
  MixedFixture f;
  Rng rng(4040);
  const std::vector<EvidenceStratum> kinds = {EvidenceStratum::real_task_anchor, EvidenceStratum::llm_driver,
                                              EvidenceStratum::bounded_extension_or_diagnostic,
                                              EvidenceStratum::decision_study};
  for (int i = 0; i < 40; ++i) {
    const EvidenceStratum kind = kinds[i % kinds.size()];
    RunRecord r = base_run();
    if (kind == EvidenceStratum::llm_driver) r = as_llm(r);
    if (kind == EvidenceStratum::decision_study) r = as_controller(r);
    if (kind == EvidenceStratum::bounded_extension_or_diagnostic) r.driver.evidence_status = EvidenceStatus::diagnostic;
    r.run_id = "run-" + std::to_string(i);
    EvidenceStratum stratum = kind;
    std::set<Reason> reasons;
    const auto roll = [&] { return rng.uniform() < 0.12; };
    if (roll()) { r.manifest_resolved = false; reasons.insert(Reason::unresolved_manifest); }
    if (roll()) { r.driver.driver_version.clear(); reasons.insert(Reason::missing_driver_metadata); }
    if (roll()) { r.trace_complete = false; reasons.insert(Reason::incomplete_trace); }
    if (roll()) { r.terminal.reset(); reasons.insert(Reason::missing_terminal_outcome); }
    if (roll()) { r.release_root.clear(); reasons.insert(Reason::missing_release_binding); }
    if (roll()) {
      r.freeze.reset();
      reasons.insert(Reason::missing_replay_freeze);
    } else if (roll()) {
      r.freeze->schema_version = "9.0.0";
      reasons.insert(Reason::version_mismatch);
    }
    if (roll()) { r.invalid_sample_marker = true; reasons.insert(Reason::invalid_sample); }
    if (roll()) { r.retry_budget_violation = true; reasons.insert(Reason::retry_budget_violation); }
    const double ev = rng.uniform();
    if (ev < 0.1) {
      r.driver.evidence_status = EvidenceStatus::fixture_backed;
      reasons.insert(Reason::fixture_only_provenance);
      stratum = EvidenceStratum::non_paper_facing;
    } else if (ev < 0.2) {
      r.driver.evidence_status = EvidenceStatus::smoke_only;
      reasons.insert(Reason::smoke_only);
      stratum = EvidenceStratum::non_paper_facing;
    }
    if (rng.uniform() < 0.3) {
      r.setting_label = "medium_live_stressed";
      if (stratum != EvidenceStratum::decision_study) reasons.insert(Reason::unsupported_stress);
    }
    f.runs.push_back(r);
    f.expected_reasons.push_back(reasons);
    f.expected_strata.push_back(stratum);
  }
  return f;
}

}  // namespace

TEST(GateReport, FortyRunTallyOracle) {
  const MixedFixture f = mixed_fixture();
  std::vector<GateDecision> ds;
  for (const auto& r : f.runs) ds.push_back(decide(r));

  for (std::size_t i = 0; i < f.runs.size(); ++i) {
    EXPECT_EQ(std::set<Reason>(ds[i].reasons.begin(), ds[i].reasons.end()), f.expected_reasons[i]) << i;
    EXPECT_EQ(ds[i].stratum, f.expected_strata[i]) << i;
  }

  for (GateScope scope : {GateScope::canonical, GateScope::decision}) {
    GateReport oracle;
    oracle.scope = scope;
    for (std::size_t i = 0; i < f.runs.size(); ++i) {
      const bool decision_row = f.expected_strata[i] == EvidenceStratum::decision_study;
      if (decision_row != (scope == GateScope::decision)) continue;
      ++oracle.indexed;
      if (!f.runs[i].trace_complete) ++oracle.validation_failures;
      if (f.expected_reasons[i].empty()) {
        ++oracle.admitted;
        ++oracle.by_stratum[std::string(to_string(f.expected_strata[i]))];
      } else {
        ++oracle.excluded;
        for (Reason r : f.expected_reasons[i]) ++oracle.by_reason[std::string(to_string(r))];
      }
    }
    const GateReport rep = gate_report(f.runs, ds, scope);
    EXPECT_EQ(rep.indexed, oracle.indexed);
    EXPECT_EQ(rep.admitted, oracle.admitted);
    EXPECT_EQ(rep.excluded, oracle.excluded);
    EXPECT_EQ(rep.by_reason, oracle.by_reason);
    EXPECT_EQ(rep.by_stratum, oracle.by_stratum);
    EXPECT_EQ(rep.validation_failures, oracle.validation_failures);
    EXPECT_EQ(rep.indexed, rep.admitted + rep.excluded);
    std::size_t reason_sum = 0;
    for (const auto& [k, v] : rep.by_reason) reason_sum += v;
    EXPECT_GE(reason_sum, rep.excluded);
  }
}

TEST(GateReport, DecisionRowsNeverInCanonicalCounts) {
  const MixedFixture f = mixed_fixture();
  std::vector<GateDecision> ds;
  for (const auto& r : f.runs) ds.push_back(decide(r));
  const GateReport canonical = gate_report(f.runs, ds, GateScope::canonical);
  const GateReport decision = gate_report(f.runs, ds, GateScope::decision);
  EXPECT_FALSE(canonical.by_stratum.count("decision_study"));
  EXPECT_EQ(canonical.indexed + decision.indexed, f.runs.size());
  for (const auto& [k, v] : decision.by_stratum) EXPECT_EQ(k, "decision_study");
}

TEST(GateReport, PermutationInvariant) {
  const MixedFixture f = mixed_fixture();
  std::vector<std::size_t> order(f.runs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(5);
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.next() % (i + 1)]);

  std::vector<RunRecord> permuted;
  std::vector<GateDecision> original, permuted_ds;
  for (const auto& r : f.runs) original.push_back(decide(r));
  for (auto i : order) {
    permuted.push_back(f.runs[i]);
    permuted_ds.push_back(decide(f.runs[i]));
  }
  for (std::size_t k = 0; k < order.size(); ++k) EXPECT_EQ(permuted_ds[k], original[order[k]]);
  EXPECT_EQ(gate_report(permuted, permuted_ds), gate_report(f.runs, original));
}

TEST(GateReport, JsonRoundTrip) {
  const MixedFixture f = mixed_fixture();
  std::vector<GateDecision> ds;
  for (const auto& r : f.runs) ds.push_back(decide(r));
  const GateReport rep = gate_report(f.runs, ds);
  EXPECT_EQ(Json(rep).get<GateReport>(), rep);
}
