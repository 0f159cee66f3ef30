#include "gatebench/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <queue>
#include <set>
#include <thread>

#include "gatebench/error.hpp"
#include "gatebench/event_log.hpp"
#include "gatebench/validator.hpp"

namespace gatebench {

std::uint64_t effective_run_seed(std::uint64_t entry_seed, std::uint32_t repetition) {
  return repetition == 0 ? entry_seed : mix64(entry_seed ^ mix64(repetition));
}

std::string make_run_id(const Digest& manifest_hash, const std::string& driver_id,
                        const std::string& setting_label, std::uint64_t seed, std::uint32_t budget,
                        std::uint32_t episodes, std::uint32_t actors, std::uint32_t repetition) {
  const Json key{{"manifest_hash", manifest_hash}, {"driver_id", driver_id},
                 {"setting_label", setting_label}, {"seed", seed},
                 {"budget", budget},               {"episodes", episodes},
                 {"actors", actors},               {"repetition", repetition}};
  return canonical_hash(key).hex.substr(0, 16);
}

namespace {

enum class Phase { start, model_end, dispatch, env_end, verifier_done, evaluator_timeout };

struct Scheduled {
  double t;
  std::uint64_t order;
  std::size_t slot;
  Phase phase;
  bool operator>(const Scheduled& o) const {
    return t != o.t ? t > o.t : order > o.order;
  }
};

struct Episode {
  std::uint32_t index = 0;
  std::string id;
  SpanId span;
  EnvState env;
  EnvRng rng;
  Rng driver_rng{0};
  Rng verifier_rng{0};
  double start_ms = 0.0;
  Action action;
  ActionRecord action_record;
  StepResult pending;
  std::uint32_t attempt = 0;
  std::uint32_t retries = 0;
  std::uint32_t invalid = 0;
  std::uint64_t policy_version_at_start = 0;
  std::uint64_t ticket = 0;
  bool verified = false;
};

class Engine {
 public:
  explicit Engine(const RunSpec& spec)
      : spec_(spec), vstate_(spec.schema_mode), queue_(spec.sim.verifier_servers) {}

  RunResult run();

 private:
  // ---- emission
  EventRecord make(EventKind kind, double t, const Episode* ep, Json payload);
  void emit(EventRecord e);

  void schedule(std::size_t slot, Phase phase, double t) {
    agenda_.push(Scheduled{t, order_++, slot, phase});
  }

  // ---- episode phases
  void start_episode(std::size_t slot, double t);
  void model_start(std::size_t slot, double t);
  void model_end(std::size_t slot, double t);
  void dispatch(std::size_t slot, double t);
  void env_end(std::size_t slot, double t);
  void submit(std::size_t slot, double t);
  void verifier_done(std::size_t slot, double t);
  void evaluator_timeout(std::size_t slot, double t);
  void finish_terminal(std::size_t slot, double t, const TerminalOutcome& outcome);
  void finish(std::size_t slot, double t, const std::string& status, bool has_terminal);
  void fill_slots(double t);

  std::string policy_version() const;
  bool controller() const { return spec_.driver.record.driver_type == DriverType::controller; }

  const RunSpec& spec_;
  RunRecord rec_;
  std::vector<EventRecord> events_;
  RunValidationState vstate_;
  std::optional<ValidationReport> failure_;

  ProvenanceFields prov_;
  std::uint64_t trace_seed_ = 0;
  std::uint64_t span_counter_ = 0;
  std::uint64_t sequence_ = 0;
  SpanId run_span_;

  VerifierQueue queue_;
  Rng background_rng_{0};
  std::priority_queue<Scheduled, std::vector<Scheduled>, std::greater<>> agenda_;
  std::uint64_t order_ = 0;
  std::vector<std::optional<Episode>> slots_;
  std::uint32_t next_episode_ = 0;
  std::uint32_t running_ = 0;
  std::uint32_t limit_ = 1;
  std::uint32_t terminal_count_ = 0;
  std::vector<TerminalOutcome> terminals_;

  // controller state
  double quality_ = 0.0;
  std::uint64_t policy_counter_ = 0;
  std::optional<TelemetryWindow> window_;
};

std::string Engine::policy_version() const {
  if (!controller()) return spec_.driver.record.policy_version();
  return spec_.driver.record.driver_version + "+p" + std::to_string(policy_counter_);
}

EventRecord Engine::make(EventKind kind, double t, const Episode* ep, Json payload) {
  EventRecord e;
  e.run_id = rec_.run_id;
  e.kind = kind;
  e.wall_clock_ms = t;
  e.provenance = prov_;
  e.payload = std::move(payload);
  e.trace = new_trace_context(trace_seed_, span_counter_++);
  if (kind != EventKind::run_start) {
    e.trace.parent_span_id = run_span_;
  }
  if (ep) {
    e.episode_id = ep->id;
    e.step_index = ep->env.step_count;
    if (kind != EventKind::episode_start) e.trace.parent_span_id = ep->span;
  }
  return e;
}

void Engine::emit(EventRecord e) {
  if (failure_) return;
  e.sequence = sequence_++;
  if (spec_.event_mutator) spec_.event_mutator(e);
  ValidationReport r = validate_event(e, vstate_);
  events_.push_back(std::move(e));
  if (!r.ok()) {
    failure_ = std::move(r);
    // Abort: record why, outside any episode, and stop the simulation.
    EventRecord err = make(EventKind::error, events_.back().wall_clock_ms, nullptr,
                           Json{{"code", "validation_failure"},
                                {"detail", failure_->violations.front().code + ": " +
                                               failure_->violations.front().detail}});
    err.sequence = sequence_++;
    events_.push_back(std::move(err));
  }
}

void Engine::start_episode(std::size_t slot, double t) {
  Episode ep;
  ep.index = next_episode_++;
  ep.id = rec_.run_id + "-e" + std::to_string(ep.index);
  ep.env = init_env(spec_.manifest, spec_.setting, rec_.run_seed, spec_.budget, spec_.sim);
  ep.env.sim_clock_ms = t;
  ep.rng = EnvRng::for_episode(rec_.run_seed, ep.index);
  ep.driver_rng = Rng(derive_seed(rec_.run_seed, ep.index, Stream::driver));
  ep.verifier_rng = Rng(derive_seed(rec_.run_seed, ep.index, Stream::verifier));
  ep.start_ms = t;
  ep.policy_version_at_start = policy_counter_;
  ++running_;

  EventRecord e = make(EventKind::episode_start, t, &ep,
                       Json{{"task_id", spec_.manifest.task_id}, {"episode_index", ep.index}});
  ep.span = e.trace.span_id;
  slots_[slot] = std::move(ep);
  emit(std::move(e));
  model_start(slot, t);
}

void Engine::model_start(std::size_t slot, double t) {
  Episode& ep = *slots_[slot];
  const Observation obs{spec_.manifest.task_id, ep.env.family, ep.env.step_count,
                        ep.env.solved_progress, ep.env.goal};
  const DriverSpec& d = spec_.driver;
  switch (d.record.driver_type) {
    case DriverType::scripted: {
      auto [r, a] = scripted_next_action(obs, d.script, ep.env.step_count, d.cyclic);
      ep.action_record = std::move(r);
      ep.action = std::move(a);
      break;
    }
    case DriverType::calibration: {
      ep.action = calibration_action(d.calibration_mode, spec_.manifest);
      ep.action_record = deterministic_action_record(obs, ep.action, "");
      break;
    }
    case DriverType::llm:
    case DriverType::sanity:
    case DriverType::controller: {
      SyntheticLlmProfile profile = d.profile;
      if (controller()) profile.success_bias = quality_;
      const LlmCallContext ctx{d.record.backend_engine, std::nullopt, d.record.prompt_template_hash};
      auto [r, a] = synthetic_llm_call(obs, profile, ep.driver_rng, ctx);
      ep.action_record = std::move(r);
      ep.action = std::move(a);
      break;
    }
  }
  ep.action_record.policy_version = policy_version();

  Json payload = Json::object();
  if (ep.action_record.prompt_hash) payload["prompt_hash"] = *ep.action_record.prompt_hash;
  emit(make(EventKind::model_request_start, t, &ep, std::move(payload)));
  schedule(slot, Phase::model_end, t + ep.action_record.model_latency_ms);
}

void Engine::model_end(std::size_t slot, double t) {
  Episode& ep = *slots_[slot];
  const ActionRecord& ar = ep.action_record;

  Json payload{{"prompt_tokens", ar.prompt_tokens}, {"completion_tokens", ar.completion_tokens}};
  if (ar.backend_engine) payload["backend_engine"] = *ar.backend_engine;
  EventRecord e = make(EventKind::model_request_end, t, &ep, std::move(payload));
  e.timing.model_latency_ms = ar.model_latency_ms;
  e.timing.service_time_ms = ar.model_latency_ms;
  emit(std::move(e));

  Json parsed = ar;
  parsed["action"] = ep.action;
  emit(make(EventKind::action_parsed, t, &ep, std::move(parsed)));
  if (ar.invalid_action) ++ep.invalid;
  ep.attempt = 0;
  dispatch(slot, t);
}

void Engine::dispatch(std::size_t slot, double t) {
  Episode& ep = *slots_[slot];
  if (draw_fault(spec_.setting, ep.rng.faults)) {
    ++ep.attempt;
    ++ep.retries;
    emit(make(EventKind::error, t, &ep,
              Json{{"code", "injected_fault"},
                   {"detail", "dispatch attempt " + std::to_string(ep.attempt)}}));
    if (ep.attempt > spec_.driver.record.retry_budget) {
      emit(make(EventKind::error, t, &ep, Json{{"code", "retry_budget_exhausted"}}));
      rec_.retry_budget_violation = true;
      emit(make(EventKind::episode_end, t, &ep, Json{{"status", "aborted"}}));
      finish(slot, t, "aborted", false);
      return;
    }
    const double backoff = spec_.sim.retry_backoff_ms * spec_.setting.env_latency_multiplier;
    EventRecord r = make(EventKind::retry, t, &ep,
                         Json{{"attempt", ep.attempt}, {"reason", "injected_fault"}});
    r.timing.service_time_ms = backoff;
    emit(std::move(r));
    schedule(slot, Phase::dispatch, t + backoff);
    return;
  }

  emit(make(EventKind::env_step_start, t, &ep, Json{{"attempt", ep.attempt}}));
  ep.env.sim_clock_ms = t;
  ep.pending = env_step(ep.env, ep.action, spec_.setting, ep.rng, spec_.sim);
  const double service = ep.pending.outcome.timing.service_time_ms;
  if (ep.env.family == Family::code) {
    EventRecord tc = make(EventKind::tool_call, t, &ep, Json{{"tool", "apply_patch"}});
    tc.timing.tool_latency_ms = service;
    tc.timing.service_time_ms = service;
    emit(std::move(tc));
  }
  schedule(slot, Phase::env_end, t + service);
}

void Engine::env_end(std::size_t slot, double t) {
  Episode& ep = *slots_[slot];
  ep.env = std::move(ep.pending.state);
  EventRecord e = make(EventKind::env_step_end, t, &ep, Json{{"progress", ep.env.solved_progress}});
  e.timing = ep.pending.outcome.timing;
  emit(std::move(e));

  switch (ep.env.family) {
    case Family::micro:
      if (ep.env.terminal) return finish_terminal(slot, t, *ep.env.terminal);
      break;
    case Family::web:
      if (ep.env.terminal) return submit(slot, t);
      break;
    case Family::code:
      if (ep.env.awaiting_verifier) return submit(slot, t);
      break;
  }
  model_start(slot, t);
}

void Engine::submit(std::size_t slot, double t) {
  Episode& ep = *slots_[slot];
  const double base = spec_.sim.verifier_demand_ms(ep.env.family);
  // Stressed settings add other tenants' submissions ahead of ours.
  const double extra = spec_.setting.verifier_arrival_rate_boost - 1.0;
  if (extra > 0.0) {
    auto n = static_cast<std::uint32_t>(std::floor(extra));
    if (background_rng_.bernoulli(extra - std::floor(extra))) ++n;
    for (std::uint32_t i = 0; i < n; ++i) {
      queue_.submit(t, draw_step_latency(base, spec_.setting, spec_.sim.verifier_cv, background_rng_));
    }
  }
  const double demand = draw_step_latency(base, spec_.setting, spec_.sim.verifier_cv, ep.verifier_rng);
  ep.ticket = queue_.submit(t, demand);
  const VerifierTicket& tk = queue_.ticket(ep.ticket);
  if (tk.queue_wait_ms() > spec_.sim.evaluator_timeout_ms) {
    schedule(slot, Phase::evaluator_timeout, t + spec_.sim.evaluator_timeout_ms);
  } else {
    schedule(slot, Phase::verifier_done, tk.finish_ms);
  }
}

void Engine::verifier_done(std::size_t slot, double t) {
  Episode& ep = *slots_[slot];
  const VerifierTicket& tk = queue_.ticket(ep.ticket);
  TerminalOutcome outcome;
  Json payload;
  if (ep.env.family == Family::code) {
    const auto decision_seed = derive_seed(rec_.run_seed, ep.index, Stream::decision);
    VerifierResult vr = verifier_outcome(queue_, ep.ticket, ep.env.patch, decision_seed,
                                         ep.env.evaluator_id);
    outcome = vr.outcome;
    payload = Json{{"patch_quality", ep.env.patch}};
  } else {
    outcome = *ep.env.terminal;
    payload = Json::object();
  }
  payload["status"] = outcome.status;
  payload["evaluator_id"] = outcome.evaluator_id;
  payload["ticket_id"] = ep.ticket;
  payload["detail"] = outcome.detail;
  EventRecord e = make(EventKind::verifier_outcome, t, &ep, std::move(payload));
  e.timing.queue_wait_ms = tk.queue_wait_ms();
  e.timing.verifier_latency_ms = tk.demand_ms;
  e.timing.service_time_ms = tk.demand_ms;
  emit(std::move(e));
  ep.verified = true;
  if (window_) {
    window_->push({t, static_cast<std::uint32_t>(queue_.pending_at(t)), tk.queue_wait_ms()});
  }
  finish_terminal(slot, t, outcome);
}

void Engine::evaluator_timeout(std::size_t slot, double t) {
  Episode& ep = *slots_[slot];
  const VerifierTicket& tk = queue_.ticket(ep.ticket);
  if (window_) {
    window_->push({t, static_cast<std::uint32_t>(queue_.pending_at(t)), tk.queue_wait_ms()});
  }
  finish_terminal(slot, t, TerminalOutcome{OutcomeStatus::error, ep.env.evaluator_id, "evaluator_timeout"});
}

void Engine::finish_terminal(std::size_t slot, double t, const TerminalOutcome& outcome) {
  Episode& ep = *slots_[slot];
  Json payload{{"status", outcome.status}, {"evaluator_id", outcome.evaluator_id}};
  if (!outcome.detail.empty()) payload["detail"] = outcome.detail;
  EventRecord e = make(EventKind::terminal_result, t, &ep, std::move(payload));
  if (ep.verified || outcome.detail == "evaluator_timeout") {
    e.timing.queue_wait_ms = queue_.ticket(ep.ticket).queue_wait_ms();
  }
  emit(std::move(e));
  const std::string status{to_string(outcome.status)};
  emit(make(EventKind::episode_end, t, &ep, Json{{"status", status}}));
  terminals_.push_back(outcome);
  ++terminal_count_;
  finish(slot, t, status, true);
}

void Engine::finish(std::size_t slot, double t, const std::string& status, bool has_terminal) {
  Episode& ep = *slots_[slot];
  EpisodeSummary s;
  s.episode_id = ep.id;
  s.status = status;
  s.steps = ep.env.step_count;
  s.start_ms = ep.start_ms;
  s.wall_ms = t;
  s.invalid_actions = ep.invalid;
  s.retries = ep.retries;
  s.verifier_outcome = ep.verified;

  if (controller()) {
    const ControllerConfig& cc = spec_.driver.controller;
    SampleMeta meta;
    meta.has_terminal_outcome = has_terminal && ep.verified;
    meta.invalid_sample_marker = ep.invalid > 0;
    meta.version_mismatch = policy_counter_ - ep.policy_version_at_start > cc.staleness_limit;
    meta.retry_count = ep.retries;
    meta.retry_budget = spec_.driver.record.retry_budget;
    const auto reason = hook_a_filter(meta);
    const bool hook_a = spec_.driver.record.controller_variant == HookVariant::hook_a_only;
    if (hook_a && reason) {
      s.sample_disposition = "dropped:" + std::string(to_string(*reason));
    } else {
      s.sample_disposition = hook_a ? "kept" : "consumed";
      if (reason) {
        quality_ -= cc.bad_sample_penalty;
      } else if (status == "success") {
        quality_ += cc.success_gain;
      }
      quality_ = std::clamp(quality_, cc.min_quality, cc.max_quality);
      ++policy_counter_;
    }
    if (!hook_a && window_) limit_ = hook_b_adjust(*window_, cc.hook_b, limit_);
  }
  rec_.episode_summaries.push_back(std::move(s));
  slots_[slot].reset();
  --running_;
  fill_slots(t);
}

void Engine::fill_slots(double t) {
  for (std::size_t slot = 0; slot < slots_.size(); ++slot) {
    if (failure_ || running_ >= limit_ || next_episode_ >= spec_.episodes) return;
    if (!slots_[slot]) start_episode(slot, t);
  }
}

RunResult Engine::run() {
  const DriverSpec& d = spec_.driver;
  if (!spec_.manifest.resolved) throw Error("unresolved_manifest", spec_.manifest.task_id);
  if (d.record.driver_id.empty()) throw Error("undeclared_driver");
  if (spec_.budget < 1) throw Error("invalid_budget");
  if (spec_.episodes < 1 || spec_.actors < 1) throw Error("invalid_plan", "episodes and actors must be positive");
  const bool has_variant = d.record.controller_variant.has_value();
  if (controller() != has_variant) {
    throw Error("invalid_hooks", "controller drivers enable exactly one hook; others none");
  }
  spec_.setting.check();

  const std::string label{to_string(spec_.setting.label)};
  rec_.task_id = spec_.manifest.task_id;
  rec_.family = spec_.manifest.family;
  rec_.manifest_hash = spec_.manifest.hash();
  rec_.manifest_resolved = true;
  rec_.driver = d.record;
  rec_.driver.budget = spec_.budget;
  rec_.driver.seed = spec_.seed;
  rec_.driver.setting_label = label;
  rec_.setting_label = label;
  rec_.run_seed = effective_run_seed(spec_.seed, spec_.repetition);
  rec_.repetition = spec_.repetition;
  rec_.entry_index = spec_.entry_index;
  rec_.actors = spec_.actors;
  rec_.planned_episodes = spec_.episodes;
  rec_.release_root = spec_.release_root;
  rec_.run_id = make_run_id(rec_.manifest_hash, d.record.driver_id, label, spec_.seed, spec_.budget,
                            spec_.episodes, spec_.actors, spec_.repetition);
  rec_.event_log_ref = "runs/" + rec_.run_id + ".events.jsonl";
  rec_.freeze = freeze_run(spec_.manifest, rec_.driver, label, spec_.versions);
  vstate_ = RunValidationState(spec_.schema_mode);
  rec_.evaluator_id = spec_.manifest.verifier_id;
  rec_.goal = init_env(spec_.manifest, spec_.setting, 0, spec_.budget, spec_.sim).goal;

  prov_.manifest_hash = rec_.manifest_hash;
  prov_.driver_id = d.record.driver_id;
  prov_.model_backend_id = d.record.model_backend_id;
  prov_.schema_version = rec_.freeze->schema_version;
  prov_.replay_class = spec_.manifest.replay_class;
  prov_.snapshot_digest = rec_.freeze->snapshot_digest;
  prov_.verifier_version = rec_.freeze->verifier_version;
  prov_.seed = rec_.run_seed;
  trace_seed_ = mix64(rec_.run_seed ^ std::stoull(rec_.run_id, nullptr, 16));
  background_rng_ = Rng(derive_seed(rec_.run_seed, 0, Stream::background));

  limit_ = spec_.actors;
  if (controller()) {
    d.profile.check();
    quality_ = d.profile.success_bias;
    if (*d.record.controller_variant == HookVariant::hook_b_only) {
      window_.emplace(d.controller.window_capacity);
      limit_ = std::clamp(spec_.actors, d.controller.hook_b.min_conc, d.controller.hook_b.max_conc);
    }
  }
  slots_.assign(std::max(spec_.actors, limit_), std::nullopt);
  if (controller() && window_) slots_.assign(d.controller.hook_b.max_conc, std::nullopt);

  EventRecord start = make(EventKind::run_start, 0.0, nullptr,
                           Json{{"setting_label", label},
                                {"task_id", rec_.task_id},
                                {"planned_episodes", spec_.episodes}});
  run_span_ = start.trace.span_id;
  emit(std::move(start));
  fill_slots(0.0);

  double now = 0.0;
  while (!agenda_.empty() && !failure_) {
    const Scheduled s = agenda_.top();
    agenda_.pop();
    now = s.t;
    switch (s.phase) {
      case Phase::start: start_episode(s.slot, now); break;
      case Phase::model_end: model_end(s.slot, now); break;
      case Phase::dispatch: dispatch(s.slot, now); break;
      case Phase::env_end: env_end(s.slot, now); break;
      case Phase::verifier_done: verifier_done(s.slot, now); break;
      case Phase::evaluator_timeout: evaluator_timeout(s.slot, now); break;
    }
  }
  emit(make(EventKind::run_end, now, nullptr,
            Json{{"episodes", static_cast<std::uint32_t>(rec_.episode_summaries.size())}}));

  rec_.wall_span_ms = now;
  rec_.trace_complete = !failure_ && vstate_.ended() && vstate_.open_episodes() == 0;
  if (terminal_count_ == spec_.episodes && !failure_) {
    TerminalOutcome agg{OutcomeStatus::success, spec_.manifest.verifier_id, ""};
    std::uint32_t ok = 0;
    for (const auto& o : terminals_) {
      if (o.status == OutcomeStatus::success) ++ok;
      if (o.status == OutcomeStatus::error ||
          (o.status == OutcomeStatus::failure && agg.status == OutcomeStatus::success)) {
        agg.status = o.status;
      }
    }
    agg.detail = std::to_string(ok) + "/" + std::to_string(spec_.episodes) + " succeeded";
    rec_.terminal = agg;
  }
  rec_.reward_trajectory = build_reward_trajectory(events_);
  return RunResult{std::move(rec_), std::move(events_)};
}

}  // namespace

RunResult execute_run(const RunSpec& spec) { return Engine(spec).run(); }

EpisodeResult run_episode(const TaskManifest& manifest, const DriverSpec& driver,
                          const OperatingSetting& setting, std::uint64_t seed,
                          std::uint32_t budget, const SimConfig& sim) {
  RunSpec spec;
  spec.manifest = manifest;
  spec.driver = driver;
  spec.setting = setting;
  spec.sim = sim;
  spec.seed = seed;
  spec.budget = budget;
  RunResult r = execute_run(spec);
  EpisodeResult out;
  if (!r.record.episode_summaries.empty()) out.summary = r.record.episode_summaries.front();
  for (const auto& e : r.events) {
    if (e.kind == EventKind::terminal_result) out.terminal = e.payload.get<TerminalOutcome>();
  }
  out.events = std::move(r.events);
  return out;
}

std::vector<RewardPoint> build_reward_trajectory(const std::vector<EventRecord>& events) {
  std::vector<RewardPoint> points{{0.0, 0.0}};
  double planned = 0.0;
  std::uint32_t successes = 0;
  for (const auto& e : events) {
    if (e.kind == EventKind::run_start) {
      planned = e.payload.value("planned_episodes", 0.0);
    } else if (e.kind == EventKind::terminal_result) {
      if (e.payload.value("status", std::string()) == "success") ++successes;
      const double reward = planned > 0.0 ? successes / planned : 0.0;
      if (points.back().wall_clock_ms == e.wall_clock_ms) {
        points.back().reward = reward;
      } else {
        points.push_back({e.wall_clock_ms, reward});
      }
    }
  }
  return points;
}

// ------------------------------------------------------------------- plan

OperatingSetting RunPlan::setting(SettingLabel label) const {
  auto it = settings.find(label);
  return it != settings.end() ? it->second : OperatingSetting::preset(label);
}

DriverSpec parse_driver_spec(const Json& doc) {
  if (!doc.is_object()) throw Error("invalid_plan", "driver must be an object");
  Json rec = doc;
  // Run-time fields are filled per entry.
  rec["budget"] = rec.value("budget", 1u);
  rec["seed"] = rec.value("seed", std::uint64_t{0});
  rec["setting_label"] = rec.value("setting_label", std::string());
  if (!rec.contains("evidence_status")) rec["evidence_status"] = "paper_facing";
  if (auto it = doc.find("prompt_template"); it != doc.end()) {
    rec["prompt_template_hash"] = sha256(it->get<std::string>());
  }
  if (auto it = doc.find("hooks"); it != doc.end()) {
    const bool a = it->value("hook_a_only", false);
    const bool b = it->value("hook_b_only", false);
    if (a == b) throw Error("invalid_hooks", "exactly one of hook_a_only / hook_b_only");
    rec["controller_variant"] = a ? HookVariant::hook_a_only : HookVariant::hook_b_only;
  }

  DriverSpec spec;
  try {
    spec.record = rec.get<DriverRecord>();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error("invalid_plan", std::string("driver: ") + e.what());
  }
  if ((spec.record.driver_type == DriverType::controller) != spec.record.controller_variant.has_value()) {
    throw Error("invalid_hooks", spec.record.driver_id);
  }
  if (auto it = doc.find("script"); it != doc.end()) {
    for (const auto& a : *it) {
      spec.script.push_back(a.is_string() ? Action{a.get<std::string>(), ActionEffect::attempt, 1.0, {}}
                                          : a.get<Action>());
    }
  }
  spec.cyclic = doc.value("cyclic", true);
  if (auto it = doc.find("calibration_mode"); it != doc.end()) {
    spec.calibration_mode = it->get<CalibrationMode>();
  }
  if (auto it = doc.find("profile"); it != doc.end()) {
    spec.profile = it->get<SyntheticLlmProfile>();
    spec.profile.check();
  }
  if (auto it = doc.find("controller"); it != doc.end()) {
    const ControllerConfig dflt;
    ControllerConfig& c = spec.controller;
    if (it->contains("hook_b")) c.hook_b = it->at("hook_b").get<HookBConfig>();
    c.window_capacity = it->value("window_capacity", dflt.window_capacity);
    c.success_gain = it->value("success_gain", dflt.success_gain);
    c.bad_sample_penalty = it->value("bad_sample_penalty", dflt.bad_sample_penalty);
    c.min_quality = it->value("min_quality", dflt.min_quality);
    c.max_quality = it->value("max_quality", dflt.max_quality);
    c.staleness_limit = it->value("staleness_limit", dflt.staleness_limit);
  }
  return spec;
}

Json driver_spec_to_json(const DriverSpec& spec) {
  Json j = spec.record;
  j.erase("budget");
  j.erase("seed");
  j.erase("setting_label");
  if (spec.record.controller_variant) {
    j.erase("controller_variant");
    const bool a = *spec.record.controller_variant == HookVariant::hook_a_only;
    j["hooks"] = Json{{"hook_a_only", a}, {"hook_b_only", !a}};
    const ControllerConfig& c = spec.controller;
    j["controller"] = Json{{"hook_b", c.hook_b},
                           {"window_capacity", c.window_capacity},
                           {"success_gain", c.success_gain},
                           {"bad_sample_penalty", c.bad_sample_penalty},
                           {"min_quality", c.min_quality},
                           {"max_quality", c.max_quality},
                           {"staleness_limit", c.staleness_limit}};
  }
  switch (spec.record.driver_type) {
    case DriverType::scripted:
      j["script"] = spec.script;
      j["cyclic"] = spec.cyclic;
      break;
    case DriverType::calibration: j["calibration_mode"] = spec.calibration_mode; break;
    default: j["profile"] = spec.profile; break;
  }
  return j;
}

RunPlan parse_run_plan(const Json& doc) {
  if (!doc.is_object()) throw Error("invalid_plan", "plan must be an object");
  RunPlan plan;
  try {
    plan.release_root = doc.at("release_root").get<std::string>();
    plan.concurrency = doc.value("concurrency", 1u);
    if (auto it = doc.find("sim_config"); it != doc.end()) plan.sim = it->get<SimConfig>();
    plan.schema_mode = doc.value("strict_schema", false) ? SchemaMode::strict : SchemaMode::permissive;
    if (auto it = doc.find("settings"); it != doc.end()) {
      for (const auto& [name, s] : it->items()) {
        Json sj = s;
        sj["label"] = name;
        const auto setting = sj.get<OperatingSetting>();
        plan.settings[setting.label] = setting;
      }
    }
    for (const auto& [ref, d] : doc.at("drivers").items()) plan.drivers[ref] = parse_driver_spec(d);
    for (const auto& ej : doc.at("entries")) {
      PlanEntry e;
      e.task_id = ej.at("task_id").get<std::string>();
      e.driver = ej.at("driver").get<std::string>();
      e.setting = ej.value("setting", SettingLabel::clean);
      e.seed = ej.value("seed", std::uint64_t{0});
      e.budget = ej.at("budget").get<std::uint32_t>();
      e.repetitions = ej.value("repetitions", 1u);
      e.episodes = ej.value("episodes", 1u);
      e.actors = ej.value("actors", 1u);
      if (e.budget < 1 || e.repetitions < 1 || e.episodes < 1 || e.actors < 1) {
        throw Error("invalid_plan", e.task_id + ": budget, repetitions, episodes, actors must be >= 1");
      }
      if (!plan.drivers.count(e.driver)) throw Error("unknown_driver_ref", e.driver);
      plan.entries.push_back(std::move(e));
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error("invalid_plan", e.what());
  }
  if (plan.concurrency < 1) throw Error("invalid_plan", "concurrency must be >= 1");
  if (plan.entries.empty()) throw Error("invalid_plan", "plan has no entries");
  return plan;
}

Json plan_to_json(const RunPlan& plan) {
  Json drivers = Json::object();
  for (const auto& [ref, d] : plan.drivers) drivers[ref] = driver_spec_to_json(d);
  Json settings = Json::object();
  for (const auto& [label, s] : plan.settings) {
    Json sj = s;
    sj.erase("label");
    settings[std::string(to_string(label))] = sj;
  }
  Json entries = Json::array();
  for (const auto& e : plan.entries) {
    entries.push_back(Json{{"task_id", e.task_id},
                           {"driver", e.driver},
                           {"setting", e.setting},
                           {"seed", e.seed},
                           {"budget", e.budget},
                           {"repetitions", e.repetitions},
                           {"episodes", e.episodes},
                           {"actors", e.actors}});
  }
  return Json{{"release_root", plan.release_root}, {"concurrency", plan.concurrency},
              {"sim_config", plan.sim},             {"strict_schema", plan.schema_mode == SchemaMode::strict},
              {"settings", settings},
              {"drivers", drivers},                 {"entries", entries}};
}

namespace {

RunResult candidate_run(const PlanEntry& e, std::size_t entry_index, std::uint32_t rep,
                        const DriverSpec& d, const std::string& root_id, const std::string& why) {
  RunResult r;
  RunRecord& rec = r.record;
  const std::string label{to_string(e.setting)};
  rec.task_id = e.task_id;
  rec.manifest_resolved = false;
  rec.resolution_error = why;
  rec.driver = d.record;
  rec.driver.budget = e.budget;
  rec.driver.seed = e.seed;
  rec.driver.setting_label = label;
  rec.setting_label = label;
  rec.run_seed = effective_run_seed(e.seed, rep);
  rec.repetition = rep;
  rec.entry_index = entry_index;
  rec.actors = e.actors;
  rec.planned_episodes = e.episodes;
  rec.release_root = root_id;
  rec.run_id = make_run_id(Digest{}, d.record.driver_id, label, e.seed, e.budget, e.episodes, e.actors, rep);
  // Distinguish candidates for different tasks that share everything else.
  rec.run_id = canonical_hash(Json{{"candidate", rec.run_id}, {"task_id", e.task_id}}).hex.substr(0, 16);
  rec.event_log_ref = "runs/" + rec.run_id + ".events.jsonl";
  rec.reward_trajectory = {{0.0, 0.0}};
  return r;
}

}  // namespace

std::vector<RunResult> run_plan(const RunPlan& plan, const ReleaseRoot& root,
                                const ManifestStore& store,
                                std::optional<std::uint32_t> concurrency) {
  if (plan.release_root != root.root_id) {
    throw Error("missing_release_binding", "plan names " + plan.release_root + ", root is " + root.root_id);
  }
  struct Job {
    std::size_t entry;
    std::uint32_t rep;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < plan.entries.size(); ++i) {
    for (std::uint32_t r = 0; r < plan.entries[i].repetitions; ++r) jobs.push_back({i, r});
  }

  // Resolve once per task, serially; manifests are then shared read-only.
  std::map<std::string, std::optional<TaskManifest>> resolved;
  std::map<std::string, std::string> unresolved_why;
  for (const auto& e : plan.entries) {
    if (resolved.count(e.task_id)) continue;
    try {
      resolved[e.task_id] = resolve_manifest(e.task_id, root, store);
    } catch (const Error& err) {
      resolved[e.task_id] = std::nullopt;
      unresolved_why[e.task_id] = err.code();
    }
  }

  std::vector<RunResult> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  auto work = [&](std::size_t k) {
    const Job& job = jobs[k];
    const PlanEntry& e = plan.entries[job.entry];
    const DriverSpec& d = plan.drivers.at(e.driver);
    try {
      const auto& m = resolved.at(e.task_id);
      if (!m) {
        results[k] = candidate_run(e, job.entry, job.rep, d, root.root_id, unresolved_why.at(e.task_id));
        return;
      }
      RunSpec spec;
      spec.manifest = *m;
      spec.driver = d;
      spec.setting = plan.setting(e.setting);
      spec.sim = plan.sim;
      spec.seed = e.seed;
      spec.budget = e.budget;
      spec.episodes = e.episodes;
      spec.actors = e.actors;
      spec.repetition = job.rep;
      spec.entry_index = job.entry;
      spec.release_root = root.root_id;
      spec.schema_mode = plan.schema_mode;
      results[k] = execute_run(spec);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };

  const std::uint32_t threads =
      std::max<std::uint32_t>(1, std::min<std::size_t>(concurrency.value_or(plan.concurrency), jobs.size()));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::uint32_t i = 0; i < threads; ++i) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < jobs.size(); k = next++) work(k);
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::set<std::string> ids;
  for (const auto& r : results) {
    if (!ids.insert(r.record.run_id).second) throw Error("run_id_collision", r.record.run_id);
  }
  return results;
}

}  // namespace gatebench
