#include "gatebench/drivers.hpp"

#include <algorithm>
#include <cmath>

#include "gatebench/error.hpp"

namespace gatebench {

Digest observation_hash(const Observation& obs) { return canonical_hash(Json(obs)); }

ActionRecord deterministic_action_record(const Observation& obs, const Action& action,
                                         const std::string& policy_version) {
  ActionRecord rec;
  rec.observation_hash = observation_hash(obs);
  rec.parsed_action_hash = canonical_hash(Json(action));
  rec.parse_status = ParseStatus::parsed;
  rec.invalid_action = false;
  rec.policy_version = policy_version;
  return rec;
}

std::pair<ActionRecord, Action> scripted_next_action(const Observation& obs,
                                                     std::span<const Action> script,
                                                     std::uint32_t step, bool cyclic) {
  if (script.empty()) throw Error("empty_script");
  if (!cyclic && step >= script.size()) throw Error("script_exhausted", std::to_string(step));
  const Action& action = script[step % script.size()];
  return {deterministic_action_record(obs, action, "scripted"), action};
}

Action calibration_action(CalibrationMode mode, const TaskManifest& task) {
  if (mode == CalibrationMode::noop) return Action::noop();
  if (!task.family_params.value("oracle_available", true)) throw Error("no_oracle", task.task_id);
  if (task.family == Family::code) {
    return Action{"apply_gold_patch", ActionEffect::attempt, 1.0, PatchQuality::gold()};
  }
  return Action{"solve", ActionEffect::attempt, 1.0, {}};
}

void SyntheticLlmProfile::check() const {
  auto prob = [](double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; };
  if (!(mean_model_latency_ms > 0.0) || !std::isfinite(mean_model_latency_ms) ||
      !(latency_cv >= 0.0) || !prob(invalid_action_prob) || !prob(success_bias) ||
      !(mean_prompt_tokens >= 0.0) || !(mean_completion_tokens >= 0.0)) {
    throw Error("invalid_profile");
  }
}

std::pair<ActionRecord, Action> synthetic_llm_call(const Observation& obs,
                                                   const SyntheticLlmProfile& profile, Rng& rng,
                                                   const LlmCallContext& ctx) {
  // Fixed draw order: latency, validity, prompt tokens, completion tokens.
  const double latency = rng.lognormal_mean_cv(profile.mean_model_latency_ms, profile.latency_cv);
  const bool invalid = rng.bernoulli(profile.invalid_action_prob);
  const auto prompt_tokens =
      static_cast<std::uint64_t>(std::llround(profile.mean_prompt_tokens * (0.9 + 0.2 * rng.uniform())));
  const auto completion_tokens = static_cast<std::uint64_t>(
      std::llround(profile.mean_completion_tokens * (0.5 + rng.uniform())));

  Action action;
  if (invalid) {
    action = Action{"unparsable", ActionEffect::invalid, 0.0, {}};
  } else {
    action = Action{"act", ActionEffect::attempt, profile.success_bias, {}};
    if (obs.family == Family::code) action.patch = PatchQuality::generated(profile.success_bias);
  }

  ActionRecord rec;
  rec.observation_hash = observation_hash(obs);
  rec.prompt_hash = canonical_hash(Json{
      {"observation", rec.observation_hash},
      {"template", ctx.prompt_template_hash ? ctx.prompt_template_hash->str() : std::string()}});
  rec.raw_output_hash = canonical_hash(
      Json{{"prompt", *rec.prompt_hash}, {"completion_tokens", completion_tokens},
           {"text", invalid ? "<malformed>" : action.name}});
  if (!invalid) rec.parsed_action_hash = canonical_hash(Json(action));
  rec.parse_status = invalid ? ParseStatus::invalid : ParseStatus::parsed;
  rec.invalid_action = invalid;
  rec.prompt_tokens = prompt_tokens;
  rec.completion_tokens = completion_tokens;
  rec.model_latency_ms = latency;
  rec.backend_engine = ctx.backend_engine;
  rec.policy_version = ctx.policy_version;
  return {rec, action};
}

SyntheticLlmDriver::SyntheticLlmDriver(SyntheticLlmProfile profile, std::uint64_t seed,
                                       LlmCallContext ctx)
    : profile_(profile), rng_(derive_seed(seed, 0, Stream::driver)), ctx_(std::move(ctx)) {
  profile_.check();
}

std::pair<ActionRecord, Action> SyntheticLlmDriver::call(const Observation& obs) {
  ++calls_;
  return synthetic_llm_call(obs, profile_, rng_, ctx_);
}

std::optional<DropReason> hook_a_filter(const SampleMeta& s) {
  if (!s.has_terminal_outcome) return DropReason::missing_terminal;
  if (s.invalid_sample_marker) return DropReason::invalid_sample;
  if (s.version_fields_present && (s.version_mismatch || s.snapshot_mismatch)) {
    return DropReason::version_snapshot_mismatch;
  }
  if (s.retry_count > s.retry_budget) return DropReason::retry_budget_exceeded;
  return std::nullopt;
}

TelemetryWindow::TelemetryWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw Error("invalid_window", "capacity must be positive");
}

void TelemetryWindow::push(const TelemetrySample& sample) {
  if (!window_.empty() && sample.wall_clock_ms < window_.back().wall_clock_ms) {
    throw Error("window_time_regression");
  }
  window_.push_back(sample);
  while (window_.size() > capacity_) window_.pop_front();
}

double TelemetryWindow::mean_queue_wait_ms() const {
  if (window_.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : window_) sum += s.verifier_queue_wait_ms;
  return sum / static_cast<double>(window_.size());
}

std::uint32_t hook_b_adjust(const TelemetryWindow& window, const HookBConfig& cfg,
                            std::uint32_t current) {
  const std::uint32_t lo = std::min(cfg.min_conc, cfg.max_conc);
  const std::uint32_t hi = std::max(cfg.min_conc, cfg.max_conc);
  current = std::clamp(current, lo, hi);
  if (window.empty()) return current;
  const double wait = window.mean_queue_wait_ms();
  if (wait > cfg.pressure_threshold_ms) {
    return current > lo + cfg.step ? current - cfg.step : lo;
  }
  if (wait < cfg.pressure_threshold_ms / 2.0) {
    return std::min(hi, current + cfg.step);
  }
  return current;
}

void to_json(Json& j, const PatchQuality& p) { j = Json{{"kind", p.kind}, {"pass_prob", p.pass_prob}}; }

void from_json(const Json& j, PatchQuality& p) {
  p.kind = j.at("kind").get<PatchKind>();
  p.pass_prob = j.value("pass_prob", 0.0);
}

void to_json(Json& j, const Action& a) {
  j = Json{{"name", a.name}, {"effect", a.effect}, {"advance_prob", a.advance_prob}, {"patch", a.patch}};
}

void from_json(const Json& j, Action& a) {
  a.name = j.at("name").get<std::string>();
  a.effect = j.at("effect").get<ActionEffect>();
  a.advance_prob = j.value("advance_prob", 1.0);
  a.patch = j.contains("patch") ? j.at("patch").get<PatchQuality>() : PatchQuality{};
}

void to_json(Json& j, const Observation& o) {
  j = Json{{"task_id", o.task_id},
           {"family", o.family},
           {"step", o.step},
           {"progress", o.progress},
           {"goal", o.goal}};
}

void to_json(Json& j, const SyntheticLlmProfile& p) {
  j = Json{{"mean_model_latency_ms", p.mean_model_latency_ms},
           {"latency_cv", p.latency_cv},
           {"invalid_action_prob", p.invalid_action_prob},
           {"mean_prompt_tokens", p.mean_prompt_tokens},
           {"mean_completion_tokens", p.mean_completion_tokens},
           {"success_bias", p.success_bias}};
}

void from_json(const Json& j, SyntheticLlmProfile& p) {
  const SyntheticLlmProfile d;
  p.mean_model_latency_ms = j.value("mean_model_latency_ms", d.mean_model_latency_ms);
  p.latency_cv = j.value("latency_cv", d.latency_cv);
  p.invalid_action_prob = j.value("invalid_action_prob", d.invalid_action_prob);
  p.mean_prompt_tokens = j.value("mean_prompt_tokens", d.mean_prompt_tokens);
  p.mean_completion_tokens = j.value("mean_completion_tokens", d.mean_completion_tokens);
  p.success_bias = j.value("success_bias", d.success_bias);
  p.check();
}

void to_json(Json& j, const HookBConfig& c) {
  j = Json{{"pressure_threshold_ms", c.pressure_threshold_ms},
           {"min_conc", c.min_conc},
           {"max_conc", c.max_conc},
           {"step", c.step}};
}

void from_json(const Json& j, HookBConfig& c) {
  const HookBConfig d;
  c.pressure_threshold_ms = j.value("pressure_threshold_ms", d.pressure_threshold_ms);
  c.min_conc = j.value("min_conc", d.min_conc);
  c.max_conc = j.value("max_conc", d.max_conc);
  c.step = j.value("step", d.step);
  if (c.min_conc < 1 || c.max_conc < c.min_conc || c.step < 1) throw Error("invalid_hook_config");
}

}  // namespace gatebench
