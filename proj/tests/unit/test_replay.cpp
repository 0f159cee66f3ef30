#include <gtest/gtest.h>

#include "common.hpp"

using namespace gatebench;
using namespace gbtest;

namespace {

std::string error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

const RunSet& web_fixture() {
  static const RunSet set = read_runset(GATEBENCH_FIXTURE_DIR "/web_r1/runset/runset.json");
  return set;
}

ReplayBundle bundle_of(const RunResult& r) {
  const TaskManifest m = demo_task(r.record.task_id);
  return build_bundle(r.record, r.events, &m);
}

}  // namespace

TEST(BuildBundle, ClassMaterialPerFamily) {
  const auto micro = bundle_of(execute_run(run_spec("micro-count", calibration_driver(CalibrationMode::oracle), 3, 5)));
  EXPECT_EQ(micro.replay_class, ReplayClass::R0);
  EXPECT_EQ(micro.material.size(), 2u);
  EXPECT_TRUE(micro.material.contains("aggregates"));
  EXPECT_TRUE(micro.material.contains("summary"));

  const RunResult web = admissible_run();
  const auto r1 = bundle_of(web);
  EXPECT_EQ(r1.replay_class, ReplayClass::R1);
  for (const char* k : {"events", "evaluator_freeze", "session", "freeze"}) EXPECT_TRUE(r1.material.contains(k)) << k;
  EXPECT_EQ(r1.material.at("events").size(), web.events.size());
  EXPECT_EQ(r1.material.at("evaluator_freeze").at("verifier_id"), "form-eval");

  const auto r2 = bundle_of(execute_run(run_spec("code-fix-1", calibration_driver(CalibrationMode::oracle), 1, 3)));
  EXPECT_EQ(r2.replay_class, ReplayClass::R2);
  for (const char* k : {"manifest", "snapshot_digest", "verifier_freeze", "episodes", "freeze"})
    EXPECT_TRUE(r2.material.contains(k)) << k;
  EXPECT_FALSE(r2.material.contains("events"));
}

TEST(BuildBundle, Errors) {
  RunResult r = admissible_run();
  r.record.freeze.reset();
  EXPECT_EQ(error_code([&] { build_bundle(r.record, r.events); }), "missing_replay_freeze");
  const RunResult code = execute_run(run_spec("code-fix-1", calibration_driver(CalibrationMode::oracle), 1, 3));
  EXPECT_EQ(error_code([&] { build_bundle(code.record, code.events); }), "unresolved_manifest");
}

TEST(ReplayR0, RecomputesSummary) {
  const auto b = bundle_of(execute_run(run_spec("micro-count", calibration_driver(CalibrationMode::oracle), 3, 5)));
  const ReplayResult r = replay_run(b);
  EXPECT_EQ(r.replay_class, ReplayClass::R0);
  EXPECT_EQ(b.material.at("aggregates").at("episodes"), 3);
  EXPECT_EQ(b.material.at("aggregates").at("successes"), 3);
}

TEST(ReplayR0, TamperedAggregateDetected) {
  const auto b = bundle_of(execute_run(run_spec("micro-count", calibration_driver(CalibrationMode::oracle), 3, 5)));
  for (const auto& [key, value] : b.material.at("aggregates").items()) {
    ReplayBundle t = b;
    if (value.is_number_unsigned()) {
      t.material["aggregates"][key] = value.get<std::uint64_t>() + 1;
    } else {
      t.material["aggregates"][key] = value.get<double>() + 0.5;
    }
    EXPECT_EQ(error_code([&] { replay_run(t); }), "replay_summary_mismatch") << key;
  }
  ReplayBundle t = b;
  t.material.erase("summary");
  EXPECT_EQ(error_code([&] { replay_run(t); }), "malformed_bundle");
}

TEST(ReplayR1, SuccessfulWebRunMatches) {
  const RunResult web = admissible_run();
  ASSERT_EQ(web.record.terminal->status, OutcomeStatus::success);
  const ReplayResult r = replay_run(bundle_of(web));
  EXPECT_TRUE(r.terminal_match);
  ASSERT_EQ(r.episodes.size(), 2u);
  for (const auto& e : r.episodes) EXPECT_EQ(e.replayed_status, "success");
  for (double v : r.per_step_latency_ms) EXPECT_EQ(v, kReplayStepCostMs);
}

TEST(ReplayR1, ShippedFixtureReductionAndFidelity) {
  const RunSet& set = web_fixture();
  ASSERT_EQ(set.runs.size(), 1u);
  ASSERT_EQ(set.runs[0].planned_episodes, 100u);
  const ReplayResult r = replay_run(build_bundle(set.runs[0], set.events[0]));
  EXPECT_TRUE(r.terminal_match);
  EXPECT_EQ(r.episodes.size(), 100u);
  EXPECT_GE(r.reduction, 0.99);
  EXPECT_LE(r.replay_mean_ms, 0.01 * r.live_mean_ms);
  EXPECT_DOUBLE_EQ(r.reduction, 1.0 - r.replay_mean_ms / r.live_mean_ms);
}

TEST(ReplayR1, TerminalFidelityAcrossDeterministicRuns) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const RunResult run = execute_run(run_spec("web-form", llm_driver(), 6, 6, 2, SettingLabel::clean, seed));
    const ReplayResult r = replay_run(bundle_of(run));
    EXPECT_TRUE(r.terminal_match) << seed;
    EXPECT_GE(r.reduction, 0.0);
    EXPECT_LE(r.reduction, 1.0);
  }
}

TEST(ReplayR1, VersionMismatch) {
  const ReplayBundle b = bundle_of(admissible_run());
  ReplayBundle t = b;
  t.material["evaluator_freeze"]["verifier_version"] = "form-eval@9.9.9";
  EXPECT_EQ(error_code([&] { replay_run(t); }), "replay_version_mismatch");
  t = b;
  t.material["events"][3]["provenance"]["manifest_hash"] = sha256("other").str();
  EXPECT_EQ(error_code([&] { replay_run(t); }), "replay_version_mismatch");
  t = b;
  t.harness_version = "9.0.0";
  EXPECT_EQ(error_code([&] { replay_run(t); }), "replay_version_mismatch");
  t = b;
  t.material.erase("session");
  EXPECT_EQ(error_code([&] { replay_run(t); }), "malformed_bundle");
}

TEST(ReplayR2, GoldAndNoopDecisionsReplay) {
  for (auto mode : {CalibrationMode::oracle, CalibrationMode::noop}) {
    const RunResult run = execute_run(run_spec("code-fix-2", calibration_driver(mode), 2, 3));
    const ReplayResult r = replay_run(bundle_of(run));
    EXPECT_TRUE(r.terminal_match);
    for (const auto& e : r.episodes)
      EXPECT_EQ(e.replayed_status, mode == CalibrationMode::oracle ? "success" : "failure");
  }
}

TEST(ReplayR2, SnapshotMismatch) {
  const ReplayBundle b = bundle_of(execute_run(run_spec("code-fix-2", calibration_driver(CalibrationMode::oracle), 1, 3)));
  ReplayBundle t = b;
  t.material["manifest"]["snapshot_ref"] = "repo@elsewhere";
  EXPECT_EQ(error_code([&] { replay_run(t); }), "replay_version_mismatch");
  t = b;
  t.material["verifier_freeze"]["verifier_version"] = "pytest-runner@0.0.1";
  EXPECT_EQ(error_code([&] { replay_run(t); }), "replay_version_mismatch");
}

TEST(Replay, Idempotent) {
  for (const auto& b : {bundle_of(admissible_run()),
                        bundle_of(execute_run(run_spec("code-fix-4", llm_driver(), 3, 3))),
                        bundle_of(execute_run(run_spec("micro-count", llm_driver(), 3, 5)))}) {
    EXPECT_EQ(replay_run(b), replay_run(b));
    EXPECT_EQ(Json(replay_run(b)).dump(), Json(replay_run(b)).dump());
  }
}

TEST(Replay, BundleJsonRoundTrip) {
  const ReplayBundle b = bundle_of(admissible_run());
  const ReplayBundle back = Json::parse(Json(b).dump()).get<ReplayBundle>();
  EXPECT_EQ(replay_run(back), replay_run(b));
}
