#include "gatebench/pipeline.hpp"

#include <algorithm>

#include "gatebench/error.hpp"
#include "gatebench/event_log.hpp"
#include "gatebench/io.hpp"

namespace gatebench {
namespace fs = std::filesystem;

namespace {

TaskManifest manifest(Family family, std::string task_id, std::string snapshot_ref,
                      ResetContract reset, std::string verifier_id, Json params) {
  TaskManifest m;
  m.family = family;
  m.task_id = std::move(task_id);
  m.snapshot_ref = std::move(snapshot_ref);
  m.reset_contract = reset;
  m.verifier_id = std::move(verifier_id);
  m.adapter_version = "0.1.0";
  m.replay_class = replay_class_for(family);
  m.schema_version = std::string(kSchemaVersion);
  m.release_binding = std::string(kDemoRootId);
  m.family_params = std::move(params);
  return m;
}

DriverRecord base_record(std::string id, DriverType type) {
  DriverRecord d;
  d.driver_id = std::move(id);
  d.driver_type = type;
  d.driver_version = "0.1.0";
  d.parser_version = "0.1.0";
  return d;
}

DriverSpec scripted(std::string id, std::vector<std::string> script, EvidenceStatus status) {
  DriverSpec s;
  s.record = base_record(std::move(id), DriverType::scripted);
  s.record.evidence_status = status;
  for (auto& name : script) s.script.push_back(Action{std::move(name), ActionEffect::attempt, 1.0, {}});
  return s;
}

DriverSpec calibration(std::string id, CalibrationMode mode) {
  DriverSpec s;
  s.record = base_record(std::move(id), DriverType::calibration);
  s.calibration_mode = mode;
  return s;
}

DriverSpec llm(std::string id, const std::string& backend) {
  DriverSpec s;
  s.record = base_record(std::move(id), DriverType::llm);
  s.record.model_family = "synthetic-chat";
  s.record.backend_engine = backend;
  s.record.model_backend_id = backend + "-sim";
  s.record.prompt_template_hash = sha256("act on the observation; reply with one action");
  s.profile = backend_profile(backend);
  return s;
}

PlanEntry entry(std::string task, std::string driver, std::uint32_t budget, std::uint32_t episodes,
                std::uint32_t actors = 1, SettingLabel setting = SettingLabel::clean, std::uint64_t seed = 7) {
  PlanEntry e;
  e.task_id = std::move(task);
  e.driver = std::move(driver);
  e.setting = setting;
  e.seed = seed;
  e.budget = budget;
  e.episodes = episodes;
  e.actors = actors;
  return e;
}

}  // namespace

std::vector<TaskManifest> demo_manifests() {
  std::vector<TaskManifest> ms;
  ms.push_back(manifest(Family::micro, "micro-count", "micro/counter@1", ResetContract::stateless, "count-check",
                        Json{{"collector_config", "counter-v1"}}));
  ms.push_back(manifest(Family::web, "web-form", "web/form-fill@3", ResetContract::session_reset, "form-eval",
                        Json{{"session_config", "headless-1"}, {"evaluator_semantics", "dom-state"},
                             {"exec_mode", "scripted-browser"}}));
  ms.push_back(manifest(Family::web, std::string(kStudyTaskId), "web/shop-flow@2", ResetContract::session_reset,
                        "shop-eval",
                        Json{{"session_config", "headless-1"}, {"evaluator_semantics", "order-state"},
                             {"exec_mode", "scripted-browser"}, {"goal", 3}}));
  for (int i = 1; i <= 5; ++i) {
    const std::string n = std::to_string(i);
    ms.push_back(manifest(Family::code, "code-fix-" + n, "code/bugfix-" + n + "@1", ResetContract::full_reset,
                          "pytest-runner",
                          Json{{"repo_state", "c0ffee" + n}, {"patch_semantics", "unified-diff"},
                               {"test_command", "pytest -q tests/test_" + n + ".py"},
                               {"verifier_version", "pytest-runner@7.4.0"}}));
  }
  return ms;
}

ReleaseRoot demo_release_root() {
  return make_release_root(std::string(kDemoRootId), demo_manifests(), "2026-01-01T00:00:00Z");
}

ReleaseRoot write_demo_root(const fs::path& dir) {
  const ManifestStore store(dir);
  for (const auto& m : demo_manifests()) store.save(m);
  ReleaseRoot root = demo_release_root();
  store.save_root(root);
  write_json_file(dir / "plan.json", plan_to_json(demo_plan()));
  return root;
}

RunPlan demo_plan() {
  RunPlan p;
  p.release_root = std::string(kDemoRootId);
  p.concurrency = 4;
  p.drivers["scripted-micro"] = scripted("scripted-micro", {"increment"}, EvidenceStatus::paper_facing);
  p.drivers["scripted-web"] = scripted("scripted-web", {"fill", "submit"}, EvidenceStatus::paper_facing);
  p.drivers["diag-web"] = scripted("diag-web", {"fill"}, EvidenceStatus::diagnostic);
  p.drivers["fixture-web"] = scripted("fixture-web", {"fill"}, EvidenceStatus::fixture_backed);
  p.drivers["smoke-micro"] = scripted("smoke-micro", {"increment"}, EvidenceStatus::smoke_only);
  p.drivers["llm-vllm"] = llm("llm-vllm", "vllm");
  p.drivers["gold"] = calibration("calib-gold", CalibrationMode::oracle);
  p.drivers["noop"] = calibration("calib-noop", CalibrationMode::noop);

  p.entries.push_back(entry("micro-count", "scripted-micro", 5, 4));
  p.entries.push_back(entry("web-form", "scripted-web", 8, 4));
  p.entries.push_back(entry("web-form", "llm-vllm", 8, 10, 2));
  p.entries.push_back(entry("web-form", "diag-web", 8, 2));
  for (int i = 1; i <= 5; ++i) {
    p.entries.push_back(entry("code-fix-" + std::to_string(i), "gold", 3, 1));
    p.entries.push_back(entry("code-fix-" + std::to_string(i), "noop", 3, 1));
  }
  for (std::uint32_t actors : {1u, 4u, 8u}) p.entries.push_back(entry("code-fix-1", "gold", 3, 32, actors));
  p.entries.push_back(entry("web-form", "fixture-web", 8, 2));
  p.entries.push_back(entry("micro-count", "smoke-micro", 5, 1));
  p.entries.push_back(entry("web-form", "llm-vllm", 8, 4, 2, SettingLabel::medium_live_stressed));
  p.entries.push_back(entry("web-checkout", "scripted-web", 8, 1));  // not in the root
  append_study(p, study_grid("small"));
  return p;
}

StudyGrid study_grid(const std::string& name, std::uint64_t seed_base) {
  StudyGrid g;
  g.seed_base = seed_base;
  if (name == "default") return g;
  if (name == "small") {
    g.backends = {"vllm"};
    g.seeds = 1;
    g.budgets = {7};
    return g;
  }
  throw Error("unknown_grid", name);
}

SyntheticLlmProfile backend_profile(const std::string& backend) {
  SyntheticLlmProfile p;
  p.mean_model_latency_ms = backend == "sglang" ? 105.0 : 120.0;
  p.latency_cv = 0.3;
  p.invalid_action_prob = 0.05;
  p.success_bias = 0.7;
  return p;
}

ControllerConfig study_controller_config() {
  ControllerConfig c;
  c.hook_b.pressure_threshold_ms = 150.0;
  c.hook_b.min_conc = 2;
  return c;
}

DriverSpec study_driver(const std::string& backend, HookVariant variant) {
  DriverSpec s = llm("ctl-" + backend + "-" + std::string(to_string(variant)), backend);
  s.record.driver_type = DriverType::controller;
  s.record.controller_variant = variant;
  s.controller = study_controller_config();
  return s;
}

void append_study(RunPlan& plan, const StudyGrid& g) {
  for (const auto& backend : g.backends) {
    for (HookVariant v : g.variants) {
      DriverSpec d = study_driver(backend, v);
      plan.drivers[d.record.driver_id] = d;
    }
  }
  for (const auto& backend : g.backends) {
    for (std::uint32_t s = 0; s < g.seeds; ++s) {
      for (std::uint32_t budget : g.budgets) {
        for (SettingLabel setting : g.settings) {
          for (HookVariant v : g.variants) {
            plan.entries.push_back(entry(std::string(kStudyTaskId),
                                         "ctl-" + backend + "-" + std::string(to_string(v)), budget,
                                         g.episodes, g.actors, setting, g.seed_base + s));
          }
        }
      }
    }
  }
}

RunPlan build_study_plan(const StudyGrid& grid, const std::string& root_id) {
  RunPlan p;
  p.release_root = root_id;
  p.concurrency = 4;
  append_study(p, grid);
  return p;
}

// ----------------------------------------------------------------- runset

RunSet make_runset(std::vector<RunResult> results, const ReleaseRoot& root, const ManifestStore& store) {
  RunSet set;
  set.root = root;
  for (auto& r : results) {
    if (r.record.manifest_resolved && !set.manifests.count(r.record.task_id)) {
      set.manifests.emplace(r.record.task_id, resolve_manifest(r.record.task_id, root, store));
    }
    set.runs.push_back(std::move(r.record));
    set.events.push_back(std::move(r.events));
  }
  return set;
}

fs::path write_runset(const fs::path& out, const RunSet& set) {
  Json runs = Json::array();
  for (std::size_t i = 0; i < set.runs.size(); ++i) {
    const RunRecord& r = set.runs[i];
    const std::string record_ref = "runs/" + r.run_id + ".run.json";
    write_json_file(out / record_ref, r);
    write_event_log(out / r.event_log_ref, set.events[i]);
    runs.push_back(Json{{"run_id", r.run_id}, {"record", record_ref}, {"events", r.event_log_ref}});
  }
  Json manifests = Json::object();
  for (const auto& [task, m] : set.manifests) manifests[task] = m;
  const fs::path index = out / "runset.json";
  write_json_file(index, Json{{"format", "gatebench-runset"},
                              {"release_root", set.root},
                              {"manifests", manifests},
                              {"runs", runs}});
  return index;
}

RunSet read_runset(const fs::path& index) {
  if (!fs::exists(index)) throw Error("missing_runset", index.string());
  RunSet set;
  try {
    const Json doc = read_json_file(index);
    if (doc.value("format", "") != "gatebench-runset") throw Error("malformed_runset", "format");
    const fs::path base = index.parent_path();
    set.root = doc.at("release_root").get<ReleaseRoot>();
    for (const auto& [task, m] : doc.at("manifests").items()) {
      TaskManifest tm = m.get<TaskManifest>();
      // Accept only manifests that still match the registry entry.
      auto it = set.root.registry.find(task);
      tm.resolved = it != set.root.registry.end() && it->second == tm.hash();
      set.manifests.emplace(task, std::move(tm));
    }
    for (const auto& r : doc.at("runs")) {
      set.runs.push_back(read_json_file(base / r.at("record").get<std::string>()).get<RunRecord>());
      set.events.push_back(read_event_log(base / r.at("events").get<std::string>()));
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error("malformed_runset", e.what());
  }
  return set;
}

// ------------------------------------------------------------------- gate

GateOutputs gate_runset(const RunSet& set, const ReleaseRoot& root) {
  GateOutputs g;
  for (const auto& r : set.runs) g.decisions.push_back(admit(r, verify_binding(r, root)));
  g.canonical = gate_report(set.runs, g.decisions, GateScope::canonical);
  g.decision = gate_report(set.runs, g.decisions, GateScope::decision);
  return g;
}

void write_gate(const fs::path& out, const GateOutputs& g) {
  write_json_file(out / "gate_report.json", g.canonical);
  write_json_file(out / "decision_gate_report.json", g.decision);
  write_json_file(out / "decisions.json", g.decisions);
}

GateOutputs read_gate(const fs::path& path) {
  const fs::path dir = fs::is_directory(path) ? path : path.parent_path();
  if (!fs::exists(dir / "gate_report.json") || !fs::exists(dir / "decisions.json")) {
    throw Error("missing_gate_report", dir.string());
  }
  GateOutputs g;
  g.canonical = read_json_file(dir / "gate_report.json").get<GateReport>();
  g.decision = read_json_file(dir / "decision_gate_report.json").get<GateReport>();
  g.decisions = read_json_file(dir / "decisions.json").get<std::vector<GateDecision>>();
  return g;
}

// ----------------------------------------------------------------- report

std::vector<ReplayResult> replay_runset(const RunSet& set, ReplayClass cls) {
  std::vector<ReplayResult> out;
  for (std::size_t i = 0; i < set.runs.size(); ++i) {
    const RunRecord& r = set.runs[i];
    if (!r.freeze || replay_class_for(r.family) != cls) continue;
    auto it = set.manifests.find(r.task_id);
    const TaskManifest* m = it == set.manifests.end() ? nullptr : &it->second;
    out.push_back(replay_run(build_bundle(r, set.events[i], m)));
  }
  return out;
}

ReportOutputs build_reports(const RunSet& set, const GateOutputs& gate) {
  ReportOutputs out;
  const AdmittedSet canonical = AdmittedSet::from(set.runs, set.events, gate.decisions, GateScope::canonical);
  const AdmittedSet decision = AdmittedSet::from(set.runs, set.events, gate.decisions, GateScope::decision);

  out.latency = latency_decomposition(canonical);
  try {
    out.invalid_actions = invalid_action_rate(canonical);
  } catch (const Error& e) {
    if (e.code() != "no_actions") throw;
  }
  out.study = decision_study(decision, gate.decision.excluded);

  ClaimDiagnostics& d = out.diagnostics;
  double live_total = 0.0, replay_total = 0.0;
  for (const auto& row : canonical.rows()) {
    const RunRecord& r = row.run;
    if (r.family == Family::web) {
      const auto res = replay_run(build_bundle(r, row.events));
      d.replay_episodes += res.episodes.size();
      d.replay_matches += static_cast<std::size_t>(
          std::count_if(res.episodes.begin(), res.episodes.end(), [](const auto& e) { return e.match; }));
      for (double v : res.live_step_latency_ms) live_total += v;
      for (double v : res.per_step_latency_ms) replay_total += v;
      out.replays.push_back(res);
    }
    if (r.family == Family::code && r.driver.driver_type == DriverType::calibration &&
        r.planned_episodes == 1) {
      std::string action;
      for (const auto& e : row.events) {
        if (e.kind == EventKind::action_parsed) {
          action = e.payload.at("action").at("name").get<std::string>();
          break;
        }
      }
      const bool pass = r.terminal && r.terminal->status == OutcomeStatus::success;
      if (action == "apply_gold_patch") {
        ++d.gold_runs;
        d.gold_pass += pass ? 1 : 0;
      } else if (action == "noop") {
        ++d.noop_runs;
        d.noop_fail += pass ? 0 : 1;
      }
    }
  }
  // Pooled over every replayed step, so scripted rows with no model time
  // weigh in by step count rather than setting the floor.
  d.replay_reduction = live_total > 0.0 ? 1.0 - replay_total / live_total : 0.0;
  out.claims = claim_matrix(gate.canonical, out.study, d);
  return out;
}

void write_reports(const fs::path& out, const ReportOutputs& r, const GateOutputs& gate) {
  write_json_file(out / "latency.json", r.latency);
  write_text_file(out / "latency.txt", format_latency_table(r.latency));
  write_json_file(out / "invalid_actions.json", r.invalid_actions ? Json(*r.invalid_actions) : Json(nullptr));
  write_json_file(out / "decision_study.json", r.study);
  write_text_file(out / "decision_study.txt", format_decision_table(r.study));
  write_text_file(out / "admission_audit.txt", format_admission_audit(gate.canonical, gate.decision));
  write_json_file(out / "claim_matrix.json", Json{{"matrix", r.claims}, {"diagnostics", r.diagnostics}});
  write_text_file(out / "claim_matrix.txt", format_claim_matrix(r.claims));
  write_json_file(out / "replay_results.json", r.replays);
}

}  // namespace gatebench
