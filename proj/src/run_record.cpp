#include "gatebench/run_record.hpp"

#include "gatebench/validator.hpp"
#include "json_util.hpp"

namespace gatebench {

using detail::get_opt;
using detail::put_opt;

BindingStatus verify_binding(const RunRecord& run, const ReleaseRoot& root) {
  BindingStatus st;
  if (run.release_root.empty() || run.release_root != root.root_id) {
    st.violations.emplace_back("missing_release_binding");
  }
  if (!run.freeze) {
    st.violations.emplace_back("missing_replay_freeze");
    return st;
  }
  const FreezeRecord& f = *run.freeze;
  if (f.manifest_hash.empty() || !root.registers(f.manifest_hash)) {
    st.violations.emplace_back("snapshot_mismatch");
  }
  if (f.manifest_hash != run.manifest_hash) st.violations.emplace_back("version_mismatch");
  if (f.schema_version.empty()) {
    st.violations.emplace_back("missing_schema_version");
  } else if (!is_supported_schema_version(f.schema_version)) {
    st.violations.emplace_back("version_mismatch");
  }
  if (f.suite_version.empty() || f.replay_harness_version.empty() || f.driver_version.empty() ||
      f.parser_version.empty() || f.verifier_version.empty()) {
    st.violations.emplace_back("missing_version_metadata");
  }
  return st;
}

void to_json(Json& j, const RewardPoint& p) {
  j = Json{{"wall_clock_ms", p.wall_clock_ms}, {"reward", p.reward}};
}

void from_json(const Json& j, RewardPoint& p) {
  p.wall_clock_ms = j.at("wall_clock_ms").get<double>();
  p.reward = j.at("reward").get<double>();
}

void to_json(Json& j, const EpisodeSummary& s) {
  j = Json{{"episode_id", s.episode_id},
           {"status", s.status},
           {"steps", s.steps},
           {"start_ms", s.start_ms},
           {"wall_ms", s.wall_ms},
           {"invalid_actions", s.invalid_actions},
           {"retries", s.retries},
           {"verifier_outcome", s.verifier_outcome},
           {"sample_disposition", s.sample_disposition}};
}

void from_json(const Json& j, EpisodeSummary& s) {
  s.episode_id = j.at("episode_id").get<std::string>();
  s.status = j.at("status").get<std::string>();
  s.steps = j.at("steps").get<std::uint32_t>();
  s.start_ms = j.at("start_ms").get<double>();
  s.wall_ms = j.at("wall_ms").get<double>();
  s.invalid_actions = j.at("invalid_actions").get<std::uint32_t>();
  s.retries = j.at("retries").get<std::uint32_t>();
  s.verifier_outcome = j.at("verifier_outcome").get<bool>();
  s.sample_disposition = j.value("sample_disposition", "");
}

void to_json(Json& j, const RunRecord& r) {
  j = Json{{"run_id", r.run_id},
           {"task_id", r.task_id},
           {"family", r.family},
           {"manifest_hash", r.manifest_hash},
           {"manifest_resolved", r.manifest_resolved},
           {"resolution_error", r.resolution_error},
           {"driver", r.driver},
           {"setting_label", r.setting_label},
           {"run_seed", r.run_seed},
           {"repetition", r.repetition},
           {"entry_index", r.entry_index},
           {"actors", r.actors},
           {"planned_episodes", r.planned_episodes},
           {"goal", r.goal},
           {"evaluator_id", r.evaluator_id},
           {"release_root", r.release_root},
           {"event_log_ref", r.event_log_ref},
           {"trace_complete", r.trace_complete},
           {"invalid_sample_marker", r.invalid_sample_marker},
           {"retry_budget_violation", r.retry_budget_violation},
           {"episode_summaries", r.episode_summaries},
           {"reward_trajectory", r.reward_trajectory},
           {"wall_span_ms", r.wall_span_ms}};
  put_opt(j, "freeze", r.freeze);
  put_opt(j, "terminal", r.terminal);
}

void from_json(const Json& j, RunRecord& r) {
  r.run_id = j.at("run_id").get<std::string>();
  r.task_id = j.at("task_id").get<std::string>();
  r.family = j.at("family").get<Family>();
  r.manifest_hash = j.at("manifest_hash").get<Digest>();
  r.manifest_resolved = j.at("manifest_resolved").get<bool>();
  r.resolution_error = j.value("resolution_error", "");
  r.driver = j.at("driver").get<DriverRecord>();
  r.setting_label = j.at("setting_label").get<std::string>();
  r.run_seed = j.at("run_seed").get<std::uint64_t>();
  r.repetition = j.at("repetition").get<std::uint32_t>();
  r.entry_index = j.at("entry_index").get<std::size_t>();
  r.actors = j.at("actors").get<std::uint32_t>();
  r.planned_episodes = j.at("planned_episodes").get<std::uint32_t>();
  r.goal = j.value("goal", 0u);
  r.evaluator_id = j.value("evaluator_id", "");
  r.release_root = j.at("release_root").get<std::string>();
  r.event_log_ref = j.at("event_log_ref").get<std::string>();
  r.trace_complete = j.at("trace_complete").get<bool>();
  r.invalid_sample_marker = j.value("invalid_sample_marker", false);
  r.retry_budget_violation = j.value("retry_budget_violation", false);
  r.episode_summaries = j.at("episode_summaries").get<std::vector<EpisodeSummary>>();
  r.reward_trajectory = j.at("reward_trajectory").get<std::vector<RewardPoint>>();
  r.wall_span_ms = j.value("wall_span_ms", 0.0);
  get_opt(j, "freeze", r.freeze);
  get_opt(j, "terminal", r.terminal);
}

}  // namespace gatebench
