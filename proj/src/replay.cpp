#include "gatebench/replay.hpp"

#include <map>
#include <numeric>

#include "gatebench/drivers.hpp"
#include "gatebench/error.hpp"
#include "gatebench/simenv.hpp"
#include "gatebench/validator.hpp"

namespace gatebench {
namespace {

struct EpisodeEvents {
  std::uint32_t index = 0;
  std::vector<const EventRecord*> events;
};

// Episodes in episode_start order.
std::vector<std::pair<std::string, EpisodeEvents>> group_episodes(const std::vector<EventRecord>& events) {
  std::vector<std::pair<std::string, EpisodeEvents>> out;
  std::map<std::string, std::size_t> pos;
  for (const auto& e : events) {
    if (e.episode_id.empty()) continue;
    auto it = pos.find(e.episode_id);
    if (it == pos.end()) {
      it = pos.emplace(e.episode_id, out.size()).first;
      out.push_back({e.episode_id, {}});
    }
    EpisodeEvents& ep = out[it->second].second;
    if (e.kind == EventKind::episode_start) ep.index = e.payload.at("episode_index").get<std::uint32_t>();
    ep.events.push_back(&e);
  }
  return out;
}

std::string recorded_status(const EpisodeEvents& ep) {
  for (const auto* e : ep.events) {
    if (e->kind == EventKind::terminal_result) return e->payload.at("status").get<std::string>();
  }
  return "none";
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

Json summarize(const Json& agg) {
  const double episodes = agg.at("episodes").get<double>();
  const double steps = agg.at("total_steps").get<double>();
  return Json{{"episodes", agg.at("episodes")},
              {"success_rate", episodes > 0 ? agg.at("successes").get<double>() / episodes : 0.0},
              {"mean_steps", episodes > 0 ? steps / episodes : 0.0},
              {"mean_step_service_ms", steps > 0 ? agg.at("total_service_ms").get<double>() / steps : 0.0}};
}

void finish(ReplayResult& r) {
  r.terminal_match = !r.episodes.empty() || r.replay_class == ReplayClass::R0;
  for (const auto& e : r.episodes) r.terminal_match = r.terminal_match && e.match;
  r.live_mean_ms = mean(r.live_step_latency_ms);
  r.replay_mean_ms = mean(r.per_step_latency_ms);
  r.reduction = r.live_mean_ms > 0.0 ? 1.0 - r.replay_mean_ms / r.live_mean_ms : 0.0;
}

ReplayResult replay_r0(const ReplayBundle& b) {
  const Json& m = b.material;
  if (!m.contains("aggregates") || !m.contains("summary")) throw Error("malformed_bundle", "R0");
  if (summarize(m.at("aggregates")) != m.at("summary")) throw Error("replay_summary_mismatch", b.run_id);
  ReplayResult r;
  r.run_id = b.run_id;
  r.replay_class = ReplayClass::R0;
  finish(r);
  return r;
}

ReplayResult replay_r1(const ReplayBundle& b) {
  const Json& m = b.material;
  for (const char* k : {"events", "evaluator_freeze", "session", "freeze"}) {
    if (!m.contains(k)) throw Error("malformed_bundle", std::string("R1 missing ") + k);
  }
  const auto events = m.at("events").get<std::vector<EventRecord>>();
  const auto freeze = m.at("freeze").get<FreezeRecord>();
  const std::string verifier_version = m.at("evaluator_freeze").at("verifier_version").get<std::string>();
  if (freeze.verifier_version != verifier_version || !is_supported_schema_version(freeze.schema_version)) {
    throw Error("replay_version_mismatch", b.run_id + ": freeze");
  }
  for (const auto& e : events) {
    if (e.provenance.verifier_version.value_or("") != verifier_version ||
        e.provenance.manifest_hash != freeze.manifest_hash) {
      throw Error("replay_version_mismatch", b.run_id + ": event " + std::to_string(e.sequence));
    }
  }

  const Json& s = m.at("session");
  const auto run_seed = s.at("run_seed").get<std::uint64_t>();
  ReplayResult r;
  r.run_id = b.run_id;
  r.replay_class = ReplayClass::R1;
  for (const auto& [id, ep] : group_episodes(events)) {
    EnvState env;
    env.family = s.at("family").get<Family>();
    env.task_id = s.at("task_id").get<std::string>();
    env.evaluator_id = m.at("evaluator_freeze").at("verifier_id").get<std::string>();
    env.goal = s.at("goal").get<std::uint32_t>();
    env.budget = s.at("budget").get<std::uint32_t>();
    Rng progress = EnvRng::for_episode(run_seed, ep.index).progress;

    double step_start = -1.0;
    for (const auto* e : ep.events) {
      if (e->kind == EventKind::model_request_start) {
        step_start = e->wall_clock_ms;
      } else if (e->kind == EventKind::env_step_end && step_start >= 0.0) {
        r.live_step_latency_ms.push_back(e->wall_clock_ms - step_start);
        step_start = -1.0;
      } else if (e->kind == EventKind::action_parsed && !env.terminal && !env.awaiting_verifier) {
        env = env_step_fixed_latency(std::move(env), e->payload.at("action").get<Action>(), progress,
                                     kReplayStepCostMs)
                  .state;
        r.per_step_latency_ms.push_back(kReplayStepCostMs);
      }
    }
    // The frozen evaluator confirms the environment's terminal state.
    EpisodeReplay er;
    er.episode_id = id;
    er.recorded_status = recorded_status(ep);
    er.replayed_status = env.terminal ? std::string(to_string(env.terminal->status)) : "none";
    er.match = er.recorded_status == er.replayed_status;
    r.episodes.push_back(std::move(er));
  }
  finish(r);
  return r;
}

ReplayResult replay_r2(const ReplayBundle& b) {
  const Json& m = b.material;
  for (const char* k : {"manifest", "snapshot_digest", "verifier_freeze", "episodes", "freeze"}) {
    if (!m.contains(k)) throw Error("malformed_bundle", std::string("R2 missing ") + k);
  }
  const auto manifest = m.at("manifest").get<TaskManifest>();
  const auto freeze = m.at("freeze").get<FreezeRecord>();
  const auto snapshot = m.at("snapshot_digest").get<Digest>();
  if (manifest.hash() != freeze.manifest_hash || snapshot != freeze.snapshot_digest ||
      snapshot != canonical_hash(Json{{"snapshot_ref", manifest.snapshot_ref}}) ||
      m.at("verifier_freeze").at("verifier_version").get<std::string>() != freeze.verifier_version) {
    throw Error("replay_version_mismatch", b.run_id);
  }
  ReplayResult r;
  r.run_id = b.run_id;
  r.replay_class = ReplayClass::R2;
  for (const auto& ej : m.at("episodes")) {
    const auto patch = ej.at("patch").get<PatchQuality>();
    const bool pass = verifier_decision(patch, ej.at("decision_seed").get<std::uint64_t>());
    EpisodeReplay er;
    er.episode_id = ej.at("episode_id").get<std::string>();
    er.recorded_status = ej.at("recorded_status").get<std::string>();
    er.replayed_status = pass ? "success" : "failure";
    er.match = er.recorded_status == er.replayed_status;
    r.episodes.push_back(std::move(er));
    r.live_step_latency_ms.push_back(ej.at("live_verifier_ms").get<double>());
    r.per_step_latency_ms.push_back(kReplayStepCostMs);
  }
  finish(r);
  return r;
}

}  // namespace

ReplayBundle build_bundle(const RunRecord& run, const std::vector<EventRecord>& events,
                          const TaskManifest* manifest) {
  if (!run.freeze) throw Error("missing_replay_freeze", run.run_id);
  ReplayBundle b;
  b.run_id = run.run_id;
  b.replay_class = replay_class_for(run.family);
  b.harness_version = run.freeze->replay_harness_version;
  Json& m = b.material;

  switch (b.replay_class) {
    case ReplayClass::R0: {
      std::uint64_t episodes = 0, successes = 0, steps = 0;
      double service = 0.0;
      for (const auto& e : events) {
        if (e.kind == EventKind::terminal_result) {
          ++episodes;
          if (e.payload.at("status") == "success") ++successes;
        } else if (e.kind == EventKind::env_step_end) {
          ++steps;
          service += e.timing.service_time_ms;
        }
      }
      m["aggregates"] = Json{{"episodes", episodes}, {"successes", successes},
                             {"total_steps", steps}, {"total_service_ms", service}};
      m["summary"] = summarize(m["aggregates"]);
      break;
    }
    case ReplayClass::R1:
      m["events"] = events;
      m["evaluator_freeze"] = Json{{"verifier_id", run.evaluator_id},
                                   {"verifier_version", run.freeze->verifier_version}};
      m["session"] = Json{{"run_seed", run.run_seed}, {"family", run.family},
                          {"task_id", run.task_id},   {"goal", run.goal},
                          {"budget", run.driver.budget}, {"setting_label", run.setting_label}};
      m["freeze"] = *run.freeze;
      break;
    case ReplayClass::R2: {
      if (!manifest) throw Error("unresolved_manifest", run.task_id);
      m["manifest"] = *manifest;
      m["snapshot_digest"] = run.freeze->snapshot_digest;
      m["verifier_freeze"] = Json{{"verifier_id", manifest->verifier_id},
                                  {"verifier_version", run.freeze->verifier_version}};
      m["freeze"] = *run.freeze;
      Json eps = Json::array();
      for (const auto& [id, ep] : group_episodes(events)) {
        Json ej{{"episode_id", id},
                {"decision_seed", derive_seed(run.run_seed, ep.index, Stream::decision)},
                {"patch", PatchQuality{}},
                {"recorded_status", recorded_status(ep)},
                {"live_verifier_ms", 0.0}};
        for (const auto* e : ep.events) {
          if (e->kind == EventKind::verifier_outcome) {
            ej["patch"] = e->payload.value("patch_quality", Json(PatchQuality{}));
            ej["live_verifier_ms"] = e->timing.queue_wait_ms + e->timing.verifier_latency_ms.value_or(0.0);
          }
        }
        eps.push_back(std::move(ej));
      }
      m["episodes"] = std::move(eps);
      break;
    }
  }
  return b;
}

ReplayResult replay_run(const ReplayBundle& bundle) {
  if (bundle.harness_version != kReplayHarnessVersion) {
    throw Error("replay_version_mismatch", "harness " + bundle.harness_version);
  }
  try {
    switch (bundle.replay_class) {
      case ReplayClass::R0: return replay_r0(bundle);
      case ReplayClass::R1: return replay_r1(bundle);
      case ReplayClass::R2: return replay_r2(bundle);
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error("malformed_bundle", e.what());
  }
  throw Error("malformed_bundle", "unknown class");
}

void to_json(Json& j, const ReplayBundle& b) {
  j = Json{{"run_id", b.run_id}, {"replay_class", b.replay_class},
           {"harness_version", b.harness_version}, {"material", b.material}};
}

void from_json(const Json& j, ReplayBundle& b) {
  b.run_id = j.at("run_id").get<std::string>();
  b.replay_class = j.at("replay_class").get<ReplayClass>();
  b.harness_version = j.at("harness_version").get<std::string>();
  b.material = j.at("material");
}

void to_json(Json& j, const EpisodeReplay& e) {
  j = Json{{"episode_id", e.episode_id}, {"recorded_status", e.recorded_status},
           {"replayed_status", e.replayed_status}, {"match", e.match}};
}

void from_json(const Json& j, EpisodeReplay& e) {
  e.episode_id = j.at("episode_id").get<std::string>();
  e.recorded_status = j.at("recorded_status").get<std::string>();
  e.replayed_status = j.at("replayed_status").get<std::string>();
  e.match = j.at("match").get<bool>();
}

void to_json(Json& j, const ReplayResult& r) {
  j = Json{{"run_id", r.run_id},
           {"replay_class", r.replay_class},
           {"terminal_match", r.terminal_match},
           {"episodes", r.episodes},
           {"live_step_latency_ms", r.live_step_latency_ms},
           {"per_step_latency_ms", r.per_step_latency_ms},
           {"live_mean_ms", r.live_mean_ms},
           {"replay_mean_ms", r.replay_mean_ms},
           {"reduction", r.reduction}};
}

void from_json(const Json& j, ReplayResult& r) {
  r.run_id = j.at("run_id").get<std::string>();
  r.replay_class = j.at("replay_class").get<ReplayClass>();
  r.terminal_match = j.at("terminal_match").get<bool>();
  r.episodes = j.at("episodes").get<std::vector<EpisodeReplay>>();
  r.live_step_latency_ms = j.at("live_step_latency_ms").get<std::vector<double>>();
  r.per_step_latency_ms = j.at("per_step_latency_ms").get<std::vector<double>>();
  r.live_mean_ms = j.at("live_mean_ms").get<double>();
  r.replay_mean_ms = j.at("replay_mean_ms").get<double>();
  r.reduction = j.at("reduction").get<double>();
}

}  // namespace gatebench
