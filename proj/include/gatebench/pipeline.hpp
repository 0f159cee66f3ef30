#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gatebench/gate.hpp"
#include "gatebench/replay.hpp"
#include "gatebench/report.hpp"
#include "gatebench/runner.hpp"

namespace gatebench {

// ------------------------------------------------------------ demo root

inline constexpr std::string_view kDemoRootId = "demo-root-v1";
inline constexpr std::string_view kStudyTaskId = "web-study";

/// micro-count, web-form, web-study and code-fix-1..5.
std::vector<TaskManifest> demo_manifests();
ReleaseRoot demo_release_root();

/// Writes manifests/, registry.json and plan.json under `dir`.
ReleaseRoot write_demo_root(const std::filesystem::path& dir);

/// Mixed canonical plan: anchors, LLM traffic, calibration controls,
/// concurrency sweep, excluded rows of every kind, and a small study slice.
RunPlan demo_plan();

// ---------------------------------------------------------- study grid

struct StudyGrid {
  std::vector<std::string> backends{"vllm", "sglang"};
  std::uint64_t seed_base = 0;
  std::uint32_t seeds = 2;
  std::vector<std::uint32_t> budgets{5, 7, 9};
  std::vector<SettingLabel> settings{SettingLabel::clean, SettingLabel::medium_live_stressed};
  std::vector<HookVariant> variants{HookVariant::hook_a_only, HookVariant::hook_b_only};
  std::uint32_t episodes = 24;
  std::uint32_t actors = 8;
};

/// "default" (2 x 2 x 3 x 2 x 2 = 48 runs) or "small" (1 x 1 x 1 x 2 x 2).
/// Errors: "unknown_grid".
StudyGrid study_grid(const std::string& name, std::uint64_t seed_base = 0);

/// Synthetic model profile per backend label.
SyntheticLlmProfile backend_profile(const std::string& backend);
ControllerConfig study_controller_config();
DriverSpec study_driver(const std::string& backend, HookVariant variant);

RunPlan build_study_plan(const StudyGrid& grid, const std::string& root_id);
/// Adds the grid's drivers and entries to an existing plan.
void append_study(RunPlan& plan, const StudyGrid& grid);

// --------------------------------------------------------------- runset

/// In-memory runset: runs, their logs, the root they bind to and the
/// manifests they used.
struct RunSet {
  ReleaseRoot root;
  std::map<std::string, TaskManifest> manifests;
  std::vector<RunRecord> runs;
  std::vector<std::vector<EventRecord>> events;
};

RunSet make_runset(std::vector<RunResult> results, const ReleaseRoot& root, const ManifestStore& store);

/// Writes runs/<id>.run.json, runs/<id>.events.jsonl and runset.json;
/// returns the index path.
std::filesystem::path write_runset(const std::filesystem::path& out, const RunSet& set);
/// Errors: "missing_runset", "malformed_runset".
RunSet read_runset(const std::filesystem::path& index);

// ----------------------------------------------------------------- gate

struct GateOutputs {
  std::vector<GateDecision> decisions;
  GateReport canonical;
  GateReport decision;
};

/// Binds every run against `root` and admits it.
GateOutputs gate_runset(const RunSet& set, const ReleaseRoot& root);
void write_gate(const std::filesystem::path& out, const GateOutputs& g);
/// Accepts the gate output directory or its gate_report.json.
GateOutputs read_gate(const std::filesystem::path& path);

// --------------------------------------------------------------- report

struct ReportOutputs {
  std::vector<LatencyBreakdown> latency;
  std::optional<InvalidActionStats> invalid_actions;
  DecisionStudyReport study;
  ClaimDiagnostics diagnostics;
  ClaimMatrix claims;
  std::vector<ReplayResult> replays;
};

/// Errors: "decision_set_mismatch" when the gate output does not cover the
/// runset.
ReportOutputs build_reports(const RunSet& set, const GateOutputs& gate);
void write_reports(const std::filesystem::path& out, const ReportOutputs& r, const GateOutputs& gate);

/// Replays every run of `cls` that carries a freeze.
std::vector<ReplayResult> replay_runset(const RunSet& set, ReplayClass cls);

}  // namespace gatebench
