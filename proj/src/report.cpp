#include "gatebench/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <tuple>

#include "gatebench/error.hpp"

namespace gatebench {

void AdmittedSet::add(RunRecord run, std::vector<EventRecord> events, const GateDecision& decision) {
  if (decision.run_id != run.run_id) throw Error("decision_set_mismatch", run.run_id);
  if (decision.verdict != Verdict::admitted) {
    throw Error("unadmitted_run", run.run_id + " is " + std::string(to_string(decision.verdict)));
  }
  rows_.push_back({std::move(run), std::move(events)});
}

AdmittedSet AdmittedSet::from(const std::vector<RunRecord>& runs,
                              const std::vector<std::vector<EventRecord>>& events,
                              const std::vector<GateDecision>& decisions, GateScope scope) {
  if (runs.size() != decisions.size() || runs.size() != events.size()) {
    throw Error("decision_set_mismatch", "runs, logs and decisions differ in length");
  }
  AdmittedSet set;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (decisions[i].run_id != runs[i].run_id) throw Error("decision_set_mismatch", runs[i].run_id);
    if (decisions[i].verdict == Verdict::admitted && in_scope(scope, decisions[i].stratum)) {
      set.add(runs[i], events[i], decisions[i]);
    }
  }
  return set;
}

double nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) throw Error("empty_sample");
  if (!(p >= 0.0 && p <= 100.0)) throw Error("invalid_percentile");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(p * n / 100.0)));
  return values[rank - 1];
}

std::vector<LatencyBreakdown> latency_decomposition(const AdmittedSet& admitted) {
  struct Acc {
    std::vector<double> samples;
    double wait_sum = 0.0;
    std::size_t waits = 0;
    std::size_t completed = 0;
    double max_span_ms = 0.0;
  };
  std::map<std::pair<Family, std::uint32_t>, Acc> groups;
  for (const auto& row : admitted.rows()) {
    Acc& a = groups[{row.run.family, row.run.actors}];
    a.max_span_ms = std::max(a.max_span_ms, row.run.wall_span_ms);
    for (const auto& e : row.events) {
      switch (e.kind) {
        case EventKind::env_step_end: a.samples.push_back(e.timing.service_time_ms); break;
        case EventKind::verifier_outcome:
          a.wait_sum += e.timing.queue_wait_ms;
          ++a.waits;
          break;
        case EventKind::terminal_result: ++a.completed; break;
        default: break;
      }
    }
  }
  std::vector<LatencyBreakdown> out;
  for (const auto& [key, a] : groups) {
    if (a.samples.empty()) continue;
    LatencyBreakdown l;
    l.family = key.first;
    l.concurrency = key.second;
    l.count = a.samples.size();
    double sum = 0.0;
    for (double v : a.samples) sum += v;
    l.mean_ms = sum / static_cast<double>(a.samples.size());
    l.p50_ms = nearest_rank(a.samples, 50);
    l.p95_ms = nearest_rank(a.samples, 95);
    l.p99_ms = nearest_rank(a.samples, 99);
    l.mean_queue_wait_ms = a.waits ? a.wait_sum / static_cast<double>(a.waits) : 0.0;
    l.completed_episodes = a.completed;
    l.throughput_eps = a.max_span_ms > 0.0 ? a.completed / (a.max_span_ms / 1000.0) : 0.0;
    out.push_back(l);
  }
  return out;
}

InvalidActionStats invalid_action_rate(const std::vector<EventRecord>& events) {
  InvalidActionStats s;
  for (const auto& e : events) {
    if (e.kind != EventKind::action_parsed) continue;
    ++s.total;
    if (e.payload.value("invalid_action", false)) ++s.invalid;
    ++s.parse_status[e.payload.value("parse_status", std::string("unknown"))];
  }
  if (s.total == 0) throw Error("no_actions");
  s.rate = static_cast<double>(s.invalid) / static_cast<double>(s.total);
  return s;
}

InvalidActionStats invalid_action_rate(const AdmittedSet& admitted) {
  std::vector<EventRecord> all;
  for (const auto& row : admitted.rows()) all.insert(all.end(), row.events.begin(), row.events.end());
  return invalid_action_rate(all);
}

double reward_auc(const std::vector<RewardPoint>& t, double horizon_ms) {
  if (t.empty() || t.front().wall_clock_ms != 0.0) throw Error("invalid_trajectory");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i].wall_clock_ms < t[i - 1].wall_clock_ms) throw Error("nonmonotone_trajectory");
  }
  if (!(horizon_ms > 0.0) || horizon_ms < t.back().wall_clock_ms) throw Error("invalid_horizon");
  double area = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double next = i + 1 < t.size() ? t[i + 1].wall_clock_ms : horizon_ms;
    area += t[i].reward * (next - t[i].wall_clock_ms);
  }
  return area / horizon_ms;
}

std::string select_variant(const std::map<std::string, double>& auc) {
  if (auc.empty()) throw Error("empty_cell");
  // std::map iterates in label order, so strict > keeps the smallest label on ties.
  auto best = auc.begin();
  for (auto it = auc.begin(); it != auc.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

namespace {
const std::vector<std::string>& study_variants() {
  static const std::vector<std::string> v{"hook_a_only", "hook_b_only"};
  return v;
}
}  // namespace

DecisionStudyReport decision_study(std::vector<DecisionCell> cells, std::size_t admitted,
                                   std::size_t blocked) {
  DecisionStudyReport rep;
  rep.admitted = admitted;
  rep.blocked = blocked;
  using Key = std::tuple<std::string, std::uint64_t, std::uint32_t>;
  std::map<Key, std::map<std::string, std::string>> groups;  // setting -> selected
  for (auto& c : cells) {
    const bool complete = std::all_of(study_variants().begin(), study_variants().end(),
                                      [&](const std::string& v) { return c.auc_by_variant.count(v) > 0; });
    c.selected = complete ? std::optional(select_variant(c.auc_by_variant)) : std::nullopt;
    if (c.selected) groups[{c.backend, c.seed, c.budget}][c.setting] = *c.selected;
  }
  for (const auto& [key, by_setting] : groups) {
    auto clean = by_setting.find("clean");
    auto medium = by_setting.find("medium_live_stressed");
    if (clean == by_setting.end() || medium == by_setting.end()) continue;
    ++rep.comparable_cells;
    if (clean->second != medium->second) ++rep.reversal_cells;
  }
  std::sort(cells.begin(), cells.end(), [](const DecisionCell& a, const DecisionCell& b) {
    return std::tie(a.backend, a.seed, a.budget, a.setting) < std::tie(b.backend, b.seed, b.budget, b.setting);
  });
  rep.cells = std::move(cells);
  return rep;
}

DecisionStudyReport decision_study(const AdmittedSet& admitted, std::size_t blocked) {
  using Key = std::tuple<std::string, std::uint64_t, std::uint32_t, std::string>;
  struct Acc {
    double horizon = 0.0;
    std::map<std::string, const RunRecord*> runs;
  };
  std::map<Key, Acc> acc;
  std::size_t n = 0;
  for (const auto& row : admitted.rows()) {
    const RunRecord& r = row.run;
    if (r.driver.driver_type != DriverType::controller || !r.driver.controller_variant) continue;
    ++n;
    const Key key{r.driver.backend_engine.value_or(""), r.driver.seed, r.driver.budget, r.setting_label};
    Acc& a = acc[key];
    a.horizon = std::max(a.horizon, r.wall_span_ms);
    const std::string variant{to_string(*r.driver.controller_variant)};
    if (a.runs.count(variant)) throw Error("duplicate_study_run", r.run_id);
    a.runs[variant] = &r;
  }
  std::vector<DecisionCell> cells;
  for (const auto& [key, a] : acc) {
    DecisionCell c;
    std::tie(c.backend, c.seed, c.budget, c.setting) = key;
    for (const auto& [variant, run] : a.runs) {
      c.auc_by_variant[variant] = reward_auc(run->reward_trajectory, a.horizon);
    }
    cells.push_back(std::move(c));
  }
  return decision_study(std::move(cells), n, blocked);
}

ClaimMatrix claim_matrix(const GateReport& gate, const DecisionStudyReport& study,
                         const ClaimDiagnostics& d, const ClaimConfig& config) {
  static const std::set<std::string> known{"evidence_admission",  "llm_driver_traffic",
                                           "verifier_calibration", "replay_behavior",
                                           "controller_decision", "controller_universality"};
  for (const auto& c : config.claims) {
    if (!known.count(c)) throw Error("unknown_claim", c);
  }
  const bool nothing_admitted = gate.admitted == 0 && study.admitted == 0;
  auto stratum_rows = [&](EvidenceStratum s) {
    auto it = gate.by_stratum.find(std::string(to_string(s)));
    return it == gate.by_stratum.end() ? std::size_t{0} : it->second;
  };

  ClaimMatrix m;
  for (const auto& c : config.claims) {
    ClaimRow row{c, ClaimStatus::not_claimed, 0, ""};
    if (c == "evidence_admission") {
      row.scope = "canonical rows bound to the release root";
      row.rows_used = gate.admitted;
      if (gate.admitted > 0) row.status = ClaimStatus::supported;
    } else if (c == "llm_driver_traffic") {
      row.scope = "synthetic model driver, admitted rows";
      row.rows_used = stratum_rows(EvidenceStratum::llm_driver);
      if (row.rows_used > 0) row.status = ClaimStatus::supported_bounded;
    } else if (c == "verifier_calibration") {
      row.scope = "code-family gold/noop controls";
      row.rows_used = d.gold_runs + d.noop_runs;
      if (d.gold_runs > 0 && d.noop_runs > 0) {
        row.status = d.gold_pass == d.gold_runs && d.noop_fail == d.noop_runs ? ClaimStatus::appendix_only
                                                                             : ClaimStatus::caveated;
      }
    } else if (c == "replay_behavior") {
      row.scope = "family-specific replay of admitted rows";
      row.rows_used = d.replay_episodes;
      if (d.replay_episodes > 0) {
        row.status = d.replay_matches == d.replay_episodes &&
                             d.replay_reduction >= config.replay_reduction
                         ? ClaimStatus::appendix_only
                         : ClaimStatus::caveated;
      }
    } else if (c == "controller_decision") {
      row.scope = "tested grid only";
      row.rows_used = study.admitted;
      if (study.comparable_cells > 0 && study.reversal_cells > 0) {
        row.status = study.blocked == 0 && study.reversal_cells == study.comparable_cells
                         ? ClaimStatus::supported
                         : ClaimStatus::caveated;
      }
    } else if (c == "controller_universality") {
      row.scope = "not tested beyond the grid";
    }
    if (nothing_admitted) row.status = ClaimStatus::not_claimed;
    m.rows.push_back(std::move(row));
  }
  return m;
}

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Left-aligned columns padded to the widest cell.
std::string render(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    width.resize(std::max(width.size(), r.size()), 0);
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  std::ostringstream out;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    std::string line;
    for (std::size_t i = 0; i < rows[k].size(); ++i) {
      line += rows[k][i];
      if (i + 1 < rows[k].size()) line += std::string(width[i] - rows[k][i].size() + 2, ' ');
    }
    out << line << "\n";
    if (k == 0) {
      std::size_t total = 0;
      for (std::size_t i = 0; i < width.size(); ++i) total += width[i] + (i + 1 < width.size() ? 2 : 0);
      out << std::string(total, '-') << "\n";
    }
  }
  return out.str();
}

}  // namespace

std::string format_decision_table(const DecisionStudyReport& s) {
  std::vector<std::vector<std::string>> rows{
      {"Backend", "Seed", "Budget", "Setting", "hook_a_only", "hook_b_only", "Selected"}};
  for (const auto& c : s.cells) {
    auto auc = [&](const char* v) {
      auto it = c.auc_by_variant.find(v);
      return it == c.auc_by_variant.end() ? std::string("-") : fixed(it->second);
    };
    rows.push_back({c.backend, std::to_string(c.seed), std::to_string(c.budget), c.setting,
                    auc("hook_a_only"), auc("hook_b_only"), c.selected.value_or("incomparable")});
  }
  std::string out = render(rows);
  out += "\nadmitted " + std::to_string(s.admitted) + ", blocked " + std::to_string(s.blocked) +
         ", reversals " + std::to_string(s.reversal_cells) + "/" + std::to_string(s.comparable_cells) +
         " comparable\n";
  return out;
}

std::string format_admission_audit(const GateReport& canonical, const GateReport& decision) {
  std::vector<std::vector<std::string>> rows{{"Scope", "Indexed", "Admitted", "Excluded", "Validation failures"}};
  for (const GateReport* g : {&canonical, &decision}) {
    rows.push_back({std::string(to_string(g->scope)), std::to_string(g->indexed), std::to_string(g->admitted),
                    std::to_string(g->excluded), std::to_string(g->validation_failures)});
  }
  std::string out = render(rows);
  std::vector<std::vector<std::string>> reasons{{"Scope", "Reason", "Rows"}};
  for (const GateReport* g : {&canonical, &decision}) {
    for (const auto& [r, n] : g->by_reason) reasons.push_back({std::string(to_string(g->scope)), r, std::to_string(n)});
  }
  out += "\n" + render(reasons);
  return out;
}

std::string format_latency_table(const std::vector<LatencyBreakdown>& ls) {
  std::vector<std::vector<std::string>> rows{{"Family", "Concurrency", "Steps", "Mean ms", "p50 ms", "p95 ms",
                                              "p99 ms", "Queue wait ms", "Throughput eps"}};
  for (const auto& l : ls) {
    rows.push_back({std::string(to_string(l.family)), std::to_string(l.concurrency), std::to_string(l.count),
                    fixed(l.mean_ms, 3), fixed(l.p50_ms, 3), fixed(l.p95_ms, 3), fixed(l.p99_ms, 3),
                    fixed(l.mean_queue_wait_ms, 3), fixed(l.throughput_eps, 3)});
  }
  return render(rows);
}

std::string format_claim_matrix(const ClaimMatrix& m) {
  std::vector<std::vector<std::string>> rows{{"Claim", "Status", "Rows", "Scope"}};
  for (const auto& r : m.rows) {
    rows.push_back({r.claim, std::string(to_string(r.status)), std::to_string(r.rows_used), r.scope});
  }
  return render(rows);
}

void to_json(Json& j, const LatencyBreakdown& l) {
  j = Json{{"family", l.family},
           {"concurrency", l.concurrency},
           {"count", l.count},
           {"mean_ms", l.mean_ms},
           {"p50_ms", l.p50_ms},
           {"p95_ms", l.p95_ms},
           {"p99_ms", l.p99_ms},
           {"mean_queue_wait_ms", l.mean_queue_wait_ms},
           {"throughput_eps", l.throughput_eps},
           {"completed_episodes", l.completed_episodes}};
}

void to_json(Json& j, const InvalidActionStats& s) {
  j = Json{{"total", s.total}, {"invalid", s.invalid}, {"rate", s.rate}, {"parse_status", s.parse_status}};
}

void to_json(Json& j, const DecisionCell& c) {
  j = Json{{"backend", c.backend}, {"seed", c.seed},        {"budget", c.budget},
           {"setting", c.setting}, {"auc_by_variant", c.auc_by_variant}};
  j["selected"] = c.selected ? Json(*c.selected) : Json(nullptr);
}

void from_json(const Json& j, DecisionCell& c) {
  c.backend = j.at("backend").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.budget = j.at("budget").get<std::uint32_t>();
  c.setting = j.at("setting").get<std::string>();
  c.auc_by_variant = j.at("auc_by_variant").get<std::map<std::string, double>>();
  if (j.contains("selected") && !j.at("selected").is_null()) {
    c.selected = j.at("selected").get<std::string>();
  } else {
    c.selected.reset();
  }
}

void to_json(Json& j, const DecisionStudyReport& r) {
  j = Json{{"cells", r.cells},
           {"admitted", r.admitted},
           {"blocked", r.blocked},
           {"comparable_cells", r.comparable_cells},
           {"reversal_cells", r.reversal_cells}};
}

void from_json(const Json& j, DecisionStudyReport& r) {
  r.cells = j.at("cells").get<std::vector<DecisionCell>>();
  r.admitted = j.at("admitted").get<std::size_t>();
  r.blocked = j.at("blocked").get<std::size_t>();
  r.comparable_cells = j.at("comparable_cells").get<std::size_t>();
  r.reversal_cells = j.at("reversal_cells").get<std::size_t>();
}

void to_json(Json& j, const ClaimRow& r) {
  j = Json{{"claim", r.claim}, {"status", r.status}, {"rows_used", r.rows_used}, {"scope", r.scope}};
}

void to_json(Json& j, const ClaimMatrix& m) { j = Json{{"rows", m.rows}}; }

void to_json(Json& j, const ClaimDiagnostics& d) {
  j = Json{{"replay_episodes", d.replay_episodes}, {"replay_matches", d.replay_matches},
           {"replay_reduction", d.replay_reduction}, {"gold_runs", d.gold_runs},
           {"gold_pass", d.gold_pass}, {"noop_runs", d.noop_runs}, {"noop_fail", d.noop_fail}};
}

}  // namespace gatebench
