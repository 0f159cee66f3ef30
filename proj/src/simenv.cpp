#include "gatebench/simenv.hpp"

#include <algorithm>
#include <cmath>

#include "gatebench/error.hpp"

namespace gatebench {

double SimConfig::base_step_ms(Family f) const {
  switch (f) {
    case Family::micro: return micro_step_ms;
    case Family::web: return web_step_ms;
    case Family::code: return code_step_ms;
  }
  return micro_step_ms;
}

std::uint32_t SimConfig::default_goal(Family f) const {
  switch (f) {
    case Family::micro: return micro_goal;
    case Family::web: return web_goal;
    case Family::code: return code_goal;
  }
  return micro_goal;
}

double SimConfig::verifier_demand_ms(Family f) const {
  return f == Family::code ? code_verifier_ms : web_evaluator_ms;
}

OperatingSetting OperatingSetting::clean() { return {}; }

OperatingSetting OperatingSetting::medium_live_stressed() {
  return {SettingLabel::medium_live_stressed, 3.0, 4.0, 2.0, 0.02};
}

OperatingSetting OperatingSetting::preset(SettingLabel label) {
  return label == SettingLabel::clean ? clean() : medium_live_stressed();
}

void OperatingSetting::check() const {
  auto factor = [](double f) { return std::isfinite(f) && f >= 1.0; };
  if (!factor(env_latency_multiplier) || !factor(tail_inflation) ||
      !factor(verifier_arrival_rate_boost) || !(fault_injection_prob >= 0.0) ||
      !(fault_injection_prob <= 1.0)) {
    throw Error("invalid_setting", "factor below 1 or probability out of range");
  }
  if (label == SettingLabel::clean &&
      (env_latency_multiplier != 1.0 || tail_inflation != 1.0 ||
       verifier_arrival_rate_boost != 1.0 || fault_injection_prob != 0.0)) {
    throw Error("invalid_setting", "clean setting must not perturb");
  }
}

EnvRng EnvRng::for_episode(std::uint64_t seed, std::uint64_t episode_index) {
  return EnvRng{Rng(derive_seed(seed, episode_index, Stream::env_progress)),
                Rng(derive_seed(seed, episode_index, Stream::env_latency)),
                Rng(derive_seed(seed, episode_index, Stream::faults))};
}

EnvState init_env(const TaskManifest& manifest, const OperatingSetting& setting, std::uint64_t,
                  std::uint32_t budget, const SimConfig& cfg) {
  if (!manifest.resolved) throw Error("unresolved_manifest", manifest.task_id);
  setting.check();
  if (budget < 1) throw Error("invalid_budget");
  EnvState s;
  s.family = manifest.family;
  s.task_id = manifest.task_id;
  s.evaluator_id = manifest.verifier_id;
  s.goal = cfg.default_goal(s.family);
  if (auto it = manifest.family_params.find("goal"); it != manifest.family_params.end()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 1) throw Error("invalid_goal");
    s.goal = static_cast<std::uint32_t>(it->get<std::int64_t>());
  }
  s.budget = budget;
  return s;
}

double draw_step_latency(double base_ms, const OperatingSetting& setting, double cv, Rng& rng) {
  double v = base_ms * setting.env_latency_multiplier * rng.lognormal_mean_cv(1.0, cv);
  if (rng.uniform() >= 0.9) v *= setting.tail_inflation;
  return v;
}

namespace {

StepResult apply_action(EnvState s, const Action& action, Rng& progress_rng, double latency_ms) {
  if (s.terminal || s.awaiting_verifier) throw Error("stepped_after_terminal", s.task_id);

  StepResult r;
  r.outcome.timing.service_time_ms = latency_ms;
  s.sim_clock_ms += latency_ms;
  s.step_count += 1;

  // One progress draw per step regardless of the action keeps the stream
  // aligned between live execution and replay.
  const double u = progress_rng.uniform();
  if (action.effect == ActionEffect::attempt && u < action.advance_prob &&
      s.solved_progress < s.goal) {
    s.solved_progress += 1;
    r.outcome.progressed = true;
    if (s.family == Family::code) s.patch = action.patch;
  }

  if (s.family == Family::code) {
    if (s.solved_progress == s.goal || s.step_count >= s.budget) s.awaiting_verifier = true;
  } else if (s.solved_progress == s.goal) {
    s.terminal = TerminalOutcome{OutcomeStatus::success, s.evaluator_id, "goal_reached"};
  } else if (s.step_count >= s.budget) {
    s.terminal = TerminalOutcome{OutcomeStatus::failure, s.evaluator_id, "budget_exhausted"};
  }
  r.state = std::move(s);
  return r;
}

}  // namespace

StepResult env_step(EnvState state, const Action& action, const OperatingSetting& setting,
                    EnvRng& rng, const SimConfig& cfg) {
  if (state.terminal || state.awaiting_verifier) throw Error("stepped_after_terminal", state.task_id);
  const double latency =
      draw_step_latency(cfg.base_step_ms(state.family), setting, cfg.step_latency_cv, rng.latency);
  return apply_action(std::move(state), action, rng.progress, latency);
}

StepResult env_step_fixed_latency(EnvState state, const Action& action, Rng& progress_rng,
                                  double latency_ms) {
  return apply_action(std::move(state), action, progress_rng, latency_ms);
}

bool draw_fault(const OperatingSetting& setting, Rng& rng) {
  return rng.bernoulli(setting.fault_injection_prob);
}

VerifierQueue::VerifierQueue(std::uint32_t servers) {
  if (servers < 1) throw Error("invalid_servers");
  busy_until_.assign(servers, 0.0);
}

std::uint64_t VerifierQueue::submit(double now_ms, double demand_ms) {
  if (!(demand_ms > 0.0) || !std::isfinite(demand_ms)) throw Error("invalid_demand");
  if (now_ms < last_submit_ms_) throw Error("submit_time_regression");
  last_submit_ms_ = now_ms;
  // FIFO: the next ticket takes the earliest-free server (lowest index on ties).
  auto server = std::min_element(busy_until_.begin(), busy_until_.end());
  VerifierTicket t;
  t.id = tickets_.size();
  t.submit_ms = now_ms;
  t.demand_ms = demand_ms;
  t.start_ms = std::max(now_ms, *server);
  t.finish_ms = t.start_ms + demand_ms;
  *server = t.finish_ms;
  tickets_.push_back(t);
  return t.id;
}

const VerifierTicket& VerifierQueue::ticket(std::uint64_t id) const {
  if (id >= tickets_.size()) throw Error("unknown_ticket", std::to_string(id));
  return tickets_[id];
}

std::size_t VerifierQueue::served_by(double t_ms) const {
  return static_cast<std::size_t>(std::count_if(tickets_.begin(), tickets_.end(),
                                                [&](const auto& t) { return t.start_ms <= t_ms; }));
}

std::size_t VerifierQueue::pending_at(double t_ms) const {
  return static_cast<std::size_t>(std::count_if(tickets_.begin(), tickets_.end(), [&](const auto& t) {
    return t.submit_ms <= t_ms && t.start_ms > t_ms;
  }));
}

bool verifier_decision(const PatchQuality& patch, std::uint64_t decision_seed) {
  switch (patch.kind) {
    case PatchKind::gold: return true;
    case PatchKind::none:
    case PatchKind::noop: return false;
    case PatchKind::generated: {
      Rng rng(decision_seed);
      return rng.bernoulli(patch.pass_prob);
    }
  }
  return false;
}

VerifierResult verifier_outcome(const VerifierQueue& queue, std::uint64_t ticket_id,
                                const PatchQuality& patch, std::uint64_t decision_seed,
                                const std::string& evaluator_id) {
  const VerifierTicket& t = queue.ticket(ticket_id);
  VerifierResult r;
  const bool pass = verifier_decision(patch, decision_seed);
  r.outcome.status = pass ? OutcomeStatus::success : OutcomeStatus::failure;
  r.outcome.evaluator_id = evaluator_id;
  r.outcome.detail = pass ? "tests_passed"
                          : (patch.kind == PatchKind::none ? "empty_patch" : "tests_failed");
  r.queue_wait_ms = t.queue_wait_ms();
  r.verifier_latency_ms = t.demand_ms;
  return r;
}

void to_json(Json& j, const SimConfig& c) {
  j = Json{{"micro_step_ms", c.micro_step_ms},
           {"web_step_ms", c.web_step_ms},
           {"code_step_ms", c.code_step_ms},
           {"step_latency_cv", c.step_latency_cv},
           {"micro_goal", c.micro_goal},
           {"web_goal", c.web_goal},
           {"code_goal", c.code_goal},
           {"code_verifier_ms", c.code_verifier_ms},
           {"web_evaluator_ms", c.web_evaluator_ms},
           {"verifier_cv", c.verifier_cv},
           {"verifier_servers", c.verifier_servers},
           {"evaluator_timeout_ms", c.evaluator_timeout_ms},
           {"retry_backoff_ms", c.retry_backoff_ms}};
}

void from_json(const Json& j, SimConfig& c) {
  const SimConfig d;
  c.micro_step_ms = j.value("micro_step_ms", d.micro_step_ms);
  c.web_step_ms = j.value("web_step_ms", d.web_step_ms);
  c.code_step_ms = j.value("code_step_ms", d.code_step_ms);
  c.step_latency_cv = j.value("step_latency_cv", d.step_latency_cv);
  c.micro_goal = j.value("micro_goal", d.micro_goal);
  c.web_goal = j.value("web_goal", d.web_goal);
  c.code_goal = j.value("code_goal", d.code_goal);
  c.code_verifier_ms = j.value("code_verifier_ms", d.code_verifier_ms);
  c.web_evaluator_ms = j.value("web_evaluator_ms", d.web_evaluator_ms);
  c.verifier_cv = j.value("verifier_cv", d.verifier_cv);
  c.verifier_servers = j.value("verifier_servers", d.verifier_servers);
  c.evaluator_timeout_ms = j.value("evaluator_timeout_ms", d.evaluator_timeout_ms);
  c.retry_backoff_ms = j.value("retry_backoff_ms", d.retry_backoff_ms);
}

void to_json(Json& j, const OperatingSetting& s) {
  j = Json{{"label", s.label},
           {"env_latency_multiplier", s.env_latency_multiplier},
           {"tail_inflation", s.tail_inflation},
           {"verifier_arrival_rate_boost", s.verifier_arrival_rate_boost},
           {"fault_injection_prob", s.fault_injection_prob}};
}

void from_json(const Json& j, OperatingSetting& s) {
  s = OperatingSetting::preset(j.at("label").get<SettingLabel>());
  s.env_latency_multiplier = j.value("env_latency_multiplier", s.env_latency_multiplier);
  s.tail_inflation = j.value("tail_inflation", s.tail_inflation);
  s.verifier_arrival_rate_boost = j.value("verifier_arrival_rate_boost", s.verifier_arrival_rate_boost);
  s.fault_injection_prob = j.value("fault_injection_prob", s.fault_injection_prob);
  s.check();
}

void to_json(Json& j, const TerminalOutcome& t) {
  j = Json{{"status", t.status}, {"evaluator_id", t.evaluator_id}, {"detail", t.detail}};
}

void from_json(const Json& j, TerminalOutcome& t) {
  t.status = j.at("status").get<OutcomeStatus>();
  t.evaluator_id = j.at("evaluator_id").get<std::string>();
  t.detail = j.value("detail", "");
}

}  // namespace gatebench
