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

const Action kSolve{"solve", ActionEffect::attempt, 1.0, {}};

}  // namespace

// ------------------------------------------------------------------- init

TEST(InitEnv, MicroDefaults) {
  const EnvState s = init_env(demo_task("micro-count"), OperatingSetting::clean(), 1, 5);
  EXPECT_EQ(s.goal, 3u);
  EXPECT_EQ(s.step_count, 0u);
  EXPECT_EQ(s.solved_progress, 0u);
  EXPECT_FALSE(s.terminal.has_value());
  EXPECT_EQ(init_env(demo_task("web-form"), OperatingSetting::clean(), 1, 5).goal, 5u);
  EXPECT_EQ(init_env(demo_task("code-fix-1"), OperatingSetting::clean(), 1, 5).goal, 1u);
}

TEST(InitEnv, Deterministic) {
  EXPECT_EQ(init_env(demo_task("web-form"), OperatingSetting::clean(), 9, 5),
            init_env(demo_task("web-form"), OperatingSetting::clean(), 9, 5));
}

TEST(InitEnv, GoalOverrideAndErrors) {
  TaskManifest m = demo_task("micro-count");
  m.family_params["goal"] = 10;
  EXPECT_EQ(init_env(m, OperatingSetting::clean(), 1, 5).goal, 10u);
  m.family_params["goal"] = 0;
  EXPECT_EQ(error_code([&] { init_env(m, OperatingSetting::clean(), 1, 5); }), "invalid_goal");
  m = demo_task("micro-count");
  EXPECT_EQ(error_code([&] { init_env(m, OperatingSetting::clean(), 1, 0); }), "invalid_budget");
  m.resolved = false;
  EXPECT_EQ(error_code([&] { init_env(m, OperatingSetting::clean(), 1, 5); }), "unresolved_manifest");
}

TEST(InitEnv, UnknownFamilyRejectedOnDecode) {
  Json doc = demo_task("micro-count");
  doc["family"] = "robotics";
  EXPECT_EQ(error_code([&] { doc.get<TaskManifest>(); }), "unsupported_family");
}

// ------------------------------------------------------------------- step

TEST(EnvStep, OracleOnMicroSucceedsAtStepThree) {
  EnvState s = init_env(demo_task("micro-count"), OperatingSetting::clean(), 1, 5);
  EnvRng rng = EnvRng::for_episode(1, 0);
  for (int i = 0; i < 3; ++i) {
    ASSERT_FALSE(s.terminal.has_value());
    s = env_step(s, kSolve, OperatingSetting::clean(), rng).state;
  }
  ASSERT_TRUE(s.terminal.has_value());
  EXPECT_EQ(s.terminal->status, OutcomeStatus::success);
  EXPECT_EQ(s.step_count, 3u);
  EXPECT_EQ(error_code([&] { env_step(s, kSolve, OperatingSetting::clean(), rng); }), "stepped_after_terminal");
}

TEST(EnvStep, NoopUntilBudgetFails) {
  EnvState s = init_env(demo_task("web-form"), OperatingSetting::clean(), 1, 5);
  EnvRng rng = EnvRng::for_episode(1, 0);
  double clock = 0.0;
  while (!s.terminal) {
    s = env_step(s, Action::noop(), OperatingSetting::clean(), rng).state;
    EXPECT_GE(s.sim_clock_ms, clock);
    clock = s.sim_clock_ms;
  }
  EXPECT_EQ(s.terminal->status, OutcomeStatus::failure);
  EXPECT_EQ(s.step_count, 5u);
  EXPECT_EQ(s.solved_progress, 0u);
}

TEST(EnvStep, CodeFamilyAwaitsVerifier) {
  EnvState s = init_env(demo_task("code-fix-1"), OperatingSetting::clean(), 1, 3);
  EnvRng rng = EnvRng::for_episode(1, 0);
  s = env_step(s, calibration_action(CalibrationMode::oracle, demo_task("code-fix-1")), OperatingSetting::clean(), rng)
          .state;
  EXPECT_TRUE(s.awaiting_verifier);
  EXPECT_FALSE(s.terminal.has_value());
  EXPECT_EQ(s.patch, PatchQuality::gold());
}

TEST(EnvStep, BaseLatencyMagnitudes) {
  const SimConfig cfg;
  for (const char* task : {"micro-count", "web-form", "code-fix-1"}) {
    const TaskManifest m = demo_task(task);
    EnvRng rng = EnvRng::for_episode(5, 0);
    double sum = 0.0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
      EnvState s = init_env(m, OperatingSetting::clean(), 5, 1);
      sum += env_step(s, Action::noop(), OperatingSetting::clean(), rng, cfg).outcome.timing.service_time_ms;
    }
    EXPECT_NEAR(sum / n, cfg.base_step_ms(m.family), 0.02 * cfg.base_step_ms(m.family)) << task;
  }
}

namespace {

double mean_latency(const OperatingSetting& setting, std::uint64_t seed, int n) {
  const TaskManifest m = demo_task("web-form");
  EnvRng rng = EnvRng::for_episode(seed, 0);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    EnvState s = init_env(m, setting, seed, 1);
    sum += env_step(s, Action::noop(), setting, rng).outcome.timing.service_time_ms;
  }
  return sum / n;
}

}  // namespace

TEST(EnvStep, MultiplierThreeGivesRatioThree) {
  const OperatingSetting x3{SettingLabel::medium_live_stressed, 3.0, 1.0, 1.0, 0.0};
  const double ratio = mean_latency(x3, 21, 10000) / mean_latency(OperatingSetting::clean(), 22, 10000);
  EXPECT_NEAR(ratio, 3.0, 0.05 * 3.0);
}

TEST(EnvStep, StressedPresetRatioMatchesTailOracle) {
  // Expected factor: multiplier * (0.9 + 0.1 * tail_inflation).
  const OperatingSetting m = OperatingSetting::medium_live_stressed();
  const double expected = m.env_latency_multiplier * (0.9 + 0.1 * m.tail_inflation);
  const double ratio = mean_latency(m, 31, 20000) / mean_latency(OperatingSetting::clean(), 32, 20000);
  EXPECT_NEAR(ratio, expected, 0.05 * expected);
}

TEST(EnvStep, FixedLatencyStepKeepsProgressStream) {
  const TaskManifest m = demo_task("web-form");
  const Action half{"try", ActionEffect::attempt, 0.5, {}};
  EnvState live = init_env(m, OperatingSetting::clean(), 3, 20);
  EnvState replay = live;
  EnvRng rng = EnvRng::for_episode(3, 0);
  Rng progress = EnvRng::for_episode(3, 0).progress;
  while (!live.terminal) {
    live = env_step(live, half, OperatingSetting::clean(), rng).state;
    replay = env_step_fixed_latency(replay, half, progress, 1.0).state;
    EXPECT_EQ(live.solved_progress, replay.solved_progress);
  }
  EXPECT_EQ(live.terminal, replay.terminal);
  EXPECT_DOUBLE_EQ(replay.sim_clock_ms, replay.step_count * 1.0);
}

TEST(EnvStep, TrajectoryBitIdenticalUnderSeed) {
  auto trajectory = [] {
    std::vector<EnvState> out;
    EnvState s = init_env(demo_task("web-form"), OperatingSetting::medium_live_stressed(), 4, 12);
    EnvRng rng = EnvRng::for_episode(4, 2);
    const Action a{"try", ActionEffect::attempt, 0.6, {}};
    while (!s.terminal) {
      s = env_step(s, a, OperatingSetting::medium_live_stressed(), rng).state;
      out.push_back(s);
    }
    return out;
  };
  EXPECT_EQ(trajectory(), trajectory());
}

// --------------------------------------------------------------- settings

TEST(OperatingSetting, CleanIsIdentity) {
  EXPECT_NO_THROW(OperatingSetting::clean().check());
  EXPECT_NO_THROW(OperatingSetting::medium_live_stressed().check());
  const auto m = OperatingSetting::medium_live_stressed();
  EXPECT_DOUBLE_EQ(m.env_latency_multiplier, 3.0);
  EXPECT_DOUBLE_EQ(m.tail_inflation, 4.0);
  EXPECT_DOUBLE_EQ(m.verifier_arrival_rate_boost, 2.0);
  EXPECT_DOUBLE_EQ(m.fault_injection_prob, 0.02);
  OperatingSetting bad = OperatingSetting::clean();
  bad.env_latency_multiplier = 2.0;
  EXPECT_EQ(error_code([&] { bad.check(); }), "invalid_setting");
  bad = OperatingSetting::medium_live_stressed();
  bad.tail_inflation = 0.5;
  EXPECT_EQ(error_code([&] { bad.check(); }), "invalid_setting");
  bad = OperatingSetting::medium_live_stressed();
  bad.fault_injection_prob = 1.5;
  EXPECT_EQ(error_code([&] { bad.check(); }), "invalid_setting");
}

TEST(OperatingSetting, FaultDrawRate) {
  Rng rng(8);
  EXPECT_FALSE(draw_fault(OperatingSetting::clean(), rng));
  int faults = 0;
  for (int i = 0; i < 50000; ++i) faults += draw_fault(OperatingSetting::medium_live_stressed(), rng);
  EXPECT_NEAR(faults / 50000.0, 0.02, 0.003);
}

// ------------------------------------------------------------------ queue

TEST(VerifierQueue, EmptyQueueStartsImmediately) {
  VerifierQueue q(1);
  const auto id = q.submit(10.0, 5.0);
  EXPECT_DOUBLE_EQ(q.ticket(id).queue_wait_ms(), 0.0);
  EXPECT_DOUBLE_EQ(q.ticket(id).finish_ms, 15.0);
}

TEST(VerifierQueue, FifoSecondTicketWaitsOneDemand) {
  VerifierQueue q(1);
  q.submit(0.0, 40.0);
  const auto second = q.submit(0.0, 40.0);
  EXPECT_DOUBLE_EQ(q.ticket(second).queue_wait_ms(), 40.0);
  VerifierQueue two(2);
  two.submit(0.0, 40.0);
  EXPECT_DOUBLE_EQ(two.ticket(two.submit(0.0, 40.0)).queue_wait_ms(), 0.0);
}

TEST(VerifierQueue, Errors) {
  VerifierQueue q(1);
  EXPECT_EQ(error_code([&] { q.submit(0.0, 0.0); }), "invalid_demand");
  q.submit(5.0, 1.0);
  EXPECT_EQ(error_code([&] { q.submit(4.0, 1.0); }), "submit_time_regression");
  EXPECT_EQ(error_code([&] { q.ticket(42); }), "unknown_ticket");
}

TEST(VerifierQueue, MM1MeanWaitMatchesClosedForm) {
  // Poisson arrivals at rho = 0.8 with exponential service: Wq = rho / (mu - lambda).
  const double mean_service = 10.0;
  const double mu = 1.0 / mean_service;
  const double lambda = 0.8 * mu;
  const double expected = (lambda / mu) / (mu - lambda);
  Rng arrivals(101), service(202);
  VerifierQueue q(1);
  double t = 0.0, sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    t += arrivals.exponential(1.0 / lambda);
    sum += q.ticket(q.submit(t, service.exponential(mean_service))).queue_wait_ms();
  }
  EXPECT_NEAR(sum / n, expected, 0.15 * expected);
}

TEST(VerifierQueue, Conservation) {
  VerifierQueue q(2);
  Rng rng(4);
  double t = 0.0;
  for (int i = 0; i < 200; ++i) q.submit(t += rng.exponential(5.0), 3.0 + rng.uniform() * 10.0);
  for (double probe = 0.0; probe <= t + 100.0; probe += 7.3) {
    std::size_t submitted = 0;
    for (std::uint64_t id = 0; id < q.submitted(); ++id) submitted += q.ticket(id).submit_ms <= probe;
    EXPECT_EQ(submitted, q.served_by(probe) + q.pending_at(probe)) << probe;
  }
}

// --------------------------------------------------------------- verifier

TEST(Verifier, GoldPassesNoopFails) {
  VerifierQueue q(1);
  const auto id = q.submit(0.0, 10.0);
  EXPECT_EQ(verifier_outcome(q, id, PatchQuality::gold(), 1, "pytest").outcome.status, OutcomeStatus::success);
  EXPECT_EQ(verifier_outcome(q, id, PatchQuality::noop(), 1, "pytest").outcome.status, OutcomeStatus::failure);
  EXPECT_EQ(verifier_outcome(q, id, PatchQuality{}, 1, "pytest").outcome.status, OutcomeStatus::failure);
  const auto r = verifier_outcome(q, id, PatchQuality::gold(), 1, "pytest");
  EXPECT_DOUBLE_EQ(r.verifier_latency_ms, 10.0);
  EXPECT_DOUBLE_EQ(r.queue_wait_ms, 0.0);
  EXPECT_EQ(r.outcome.evaluator_id, "pytest");
  EXPECT_EQ(error_code([&] { verifier_outcome(q, 9, PatchQuality::gold(), 1, "pytest"); }), "unknown_ticket");
}

TEST(Verifier, GeneratedProbability) {
  int pass0 = 0, pass1 = 0, pass_half = 0;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    if (s < 100) {
      pass0 += verifier_decision(PatchQuality::generated(0.0), s);
      pass1 += verifier_decision(PatchQuality::generated(1.0), s);
    }
    pass_half += verifier_decision(PatchQuality::generated(0.5), s);
  }
  EXPECT_EQ(pass0, 0);
  EXPECT_EQ(pass1, 100);
  EXPECT_NEAR(pass_half / 2000.0, 0.5, 0.05);
  EXPECT_EQ(verifier_decision(PatchQuality::generated(0.5), 77), verifier_decision(PatchQuality::generated(0.5), 77));
}
