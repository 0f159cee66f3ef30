// Independent oracles shared by unit tests and the acceptance binary.
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "gatebench/pipeline.hpp"
#include "gatebench/validator.hpp"

namespace oracle {

using namespace gatebench;

// ------------------------------------------------------------------- AUC

// Sum of increments: r0 * H + sum_k (r_k - r_{k-1}) * (H - t_k).
inline double auc(const std::vector<RewardPoint>& t, double horizon) {
  double area = t.front().reward * horizon;
  for (std::size_t k = 1; k < t.size(); ++k) area += (t[k].reward - t[k - 1].reward) * (horizon - t[k].wall_clock_ms);
  return area / horizon;
}

inline std::vector<RewardPoint> random_trajectory(Rng& rng) {
  std::vector<RewardPoint> t{{0.0, 0.0}};
  const int n = 1 + static_cast<int>(rng.next() % 30);
  double clock = 0.0, reward = 0.0;
  for (int i = 0; i < n; ++i) {
    clock += 0.5 + rng.uniform() * 100.0;
    reward = std::min(1.0, reward + rng.uniform() * 0.1);
    t.push_back({clock, reward});
  }
  return t;
}

// ----------------------------------------------------- required-field fuzz

// Written from the event contract rather than read back from the validator.
inline const std::set<std::string> kTopLevel = {"run_id",   "episode_id",    "step_index", "trace",      "kind",
                                                "sequence", "wall_clock_ms", "timing",     "provenance", "payload"};
inline const std::set<std::string> kTraceAlways = {"trace_id", "span_id"};
inline const std::set<std::string> kTimingAlways = {"queue_wait_ms", "service_time_ms"};
inline const std::set<std::string> kProvenance = {"manifest_hash", "driver_id", "schema_version", "replay_class",
                                                  "seed"};

inline const std::map<std::string, std::set<std::string>> kPayload = {
    {"run_start", {"setting_label", "task_id", "planned_episodes"}},
    {"run_end", {"episodes"}},
    {"episode_start", {"task_id", "episode_index"}},
    {"episode_end", {"status"}},
    {"model_request_start", {}},
    {"model_request_end", {"prompt_tokens", "completion_tokens"}},
    {"action_parsed",
     {"observation_hash", "parse_status", "invalid_action", "prompt_tokens", "completion_tokens", "model_latency_ms",
      "action"}},
    {"env_step_start", {"attempt"}},
    {"env_step_end", {"progress"}},
    {"tool_call", {"tool"}},
    {"verifier_outcome", {"status", "evaluator_id", "ticket_id"}},
    {"retry", {"attempt", "reason"}},
    {"error", {"code"}},
    {"terminal_result", {"status", "evaluator_id"}},
};

inline const std::map<std::string, std::string> kKindTiming = {
    {"model_request_end", "model_latency_ms"},
    {"tool_call", "tool_latency_ms"},
    {"verifier_outcome", "verifier_latency_ms"},
};

inline bool required(const Json& doc, const std::string& section, const std::string& key) {
  const std::string kind = doc.at("kind").get<std::string>();
  if (section.empty()) return kTopLevel.count(key) > 0;
  if (section == "trace") return kTraceAlways.count(key) || (key == "parent_span_id" && kind != "run_start");
  if (section == "timing") {
    auto it = kKindTiming.find(kind);
    return kTimingAlways.count(key) || (it != kKindTiming.end() && it->second == key);
  }
  if (section == "provenance") return kProvenance.count(key) > 0;
  return kPayload.at(kind).count(key) > 0;
}

struct FuzzCorpus {
  std::vector<std::vector<Json>> logs;
  // states[l][i]: validator state after accepting events [0, i) of log l.
  std::vector<std::vector<RunValidationState>> states;
  std::set<std::string> kinds;
  bool all_valid = true;
};

inline TaskManifest resolved(const std::string& task) {
  for (auto m : demo_manifests()) {
    if (m.task_id == task) {
      m.resolved = true;
      return m;
    }
  }
  throw Error("unresolved_manifest", task);
}

inline FuzzCorpus fuzz_corpus() {
  const RunPlan plan = demo_plan();
  auto spec = [&](const std::string& task, const std::string& driver, std::uint32_t episodes, std::uint32_t budget,
                  std::uint32_t actors, SettingLabel setting, std::uint64_t seed) {
    RunSpec s;
    s.manifest = resolved(task);
    s.driver = plan.drivers.at(driver);
    s.setting = OperatingSetting::preset(setting);
    s.sim = plan.sim;
    s.seed = seed;
    s.budget = budget;
    s.episodes = episodes;
    s.actors = actors;
    s.release_root = std::string(kDemoRootId);
    return s;
  };
  std::vector<RunResult> runs;
  runs.push_back(execute_run(spec("web-form", "llm-vllm", 4, 8, 2, SettingLabel::clean, 7)));
  runs.push_back(execute_run(spec("code-fix-1", "gold", 2, 3, 2, SettingLabel::clean, 7)));
  runs.push_back(execute_run(spec("micro-count", "scripted-micro", 2, 5, 1, SettingLabel::clean, 7)));
  // Stressed traffic contributes retry and error events.
  for (std::uint64_t seed = 1; seed < 40 && runs.size() < 5; ++seed) {
    auto r = execute_run(spec("web-form", "llm-vllm", 6, 8, 3, SettingLabel::medium_live_stressed, seed));
    for (const auto& e : r.events) {
      if (e.kind == EventKind::retry) {
        runs.push_back(std::move(r));
        break;
      }
    }
  }
  FuzzCorpus c;
  for (const auto& r : runs) {
    std::vector<Json> docs;
    std::vector<RunValidationState> st(1);
    for (const auto& e : r.events) {
      docs.push_back(Json(e));
      RunValidationState next = st.back();
      c.all_valid = c.all_valid && validate_event(docs.back(), next).ok();
      st.push_back(next);
      c.kinds.insert(docs.back().at("kind").get<std::string>());
    }
    c.logs.push_back(std::move(docs));
    c.states.push_back(std::move(st));
  }
  return c;
}

struct FuzzStats {
  std::size_t mutations = 0;
  std::size_t required = 0;
  std::size_t optional = 0;
  std::size_t false_accepts = 0;
  std::size_t false_rejects = 0;
  std::vector<std::string> failures;  // first few, for diagnostics
};

// Deletes one random field per mutation and checks the validator against the oracle.
inline FuzzStats run_fuzz(const FuzzCorpus& c, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  FuzzStats s;
  while (s.mutations < n) {
    const std::size_t l = rng.next() % c.logs.size();
    const std::size_t i = rng.next() % c.logs[l].size();
    Json doc = c.logs[l][i];
    std::vector<std::pair<std::string, std::string>> paths;
    for (const auto& [k, v] : doc.items()) {
      paths.emplace_back("", k);
      if (v.is_object())
        for (const auto& [k2, v2] : v.items()) paths.emplace_back(k, k2);
    }
    const auto [section, key] = paths[rng.next() % paths.size()];
    const bool req = required(doc, section, key);
    const std::string kind = doc.at("kind").get<std::string>();
    if (section.empty()) {
      doc.erase(key);
    } else {
      doc[section].erase(key);
    }
    RunValidationState st = c.states[l][i];
    const bool accepted = validate_event(doc, st).ok();
    ++s.mutations;
    if (req) {
      ++s.required;
      if (accepted) ++s.false_accepts;
    } else {
      ++s.optional;
      if (!accepted) ++s.false_rejects;
    }
    if (req == accepted && s.failures.size() < 10)
      s.failures.push_back((req ? "accepted " : "rejected optional ") + section + "." + key + " on " + kind);
  }
  return s;
}

}  // namespace oracle
