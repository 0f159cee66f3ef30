#include "gatebench/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "gatebench/error.hpp"
#include "gatebench/io.hpp"
#include "gatebench/pipeline.hpp"

namespace gatebench {
namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string plan;
  std::string release_root;
  std::string out;
  std::optional<std::uint32_t> concurrency;
  std::string grid = "default";
  std::uint64_t seed_base = 0;
  std::optional<std::string> setting;
  bool strict_schema = false;
  std::string runset;
  std::string gate;
  std::string bundle;
  std::optional<std::string> replay_class;
};

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;
constexpr int kValidator = 3;

bool validator_rejected(const RunSet& set) {
  for (const auto& log : set.events) {
    for (const auto& e : log) {
      if (e.kind == EventKind::error && e.payload.value("code", "") == "validation_failure") return true;
    }
  }
  return false;
}

RunPlan load_plan(const Flags& f) {
  RunPlan plan = parse_run_plan(read_json_file(f.plan));
  if (f.setting) {
    const auto label = parse_enum<SettingLabel>(*f.setting);
    for (auto& e : plan.entries) e.setting = label;
  }
  if (f.strict_schema) plan.schema_mode = SchemaMode::strict;
  return plan;
}

RunSet run_and_write(const RunPlan& plan, const fs::path& root_dir, const Flags& f) {
  const ManifestStore store(root_dir);
  const ReleaseRoot root = store.load_root();
  RunSet set = make_runset(run_plan(plan, root, store, f.concurrency), root, store);
  write_runset(f.out, set);
  return set;
}

GateOutputs gate_and_write(const RunSet& set, const ReleaseRoot& root, const fs::path& out) {
  GateOutputs g = gate_runset(set, root);
  write_gate(out, g);
  return g;
}

int cmd_init_root(const Flags& f) {
  write_demo_root(f.out);
  return kOk;
}

int cmd_run(const Flags& f) {
  const RunSet set = run_and_write(load_plan(f), f.release_root, f);
  return validator_rejected(set) ? kValidator : kOk;
}

int cmd_gate(const Flags& f) {
  const RunSet set = read_runset(f.runset);
  const ReleaseRoot root = f.release_root.empty() ? set.root : ManifestStore(f.release_root).load_root();
  gate_and_write(set, root, f.out);
  return kOk;
}

int cmd_replay(const Flags& f) {
  std::vector<ReplayResult> results;
  std::vector<ReplayBundle> bundles;
  if (!f.bundle.empty()) {
    results.push_back(replay_run(read_json_file(f.bundle).get<ReplayBundle>()));
  } else {
    const RunSet set = read_runset(f.runset);
    const ReplayClass cls = parse_enum<ReplayClass>(f.replay_class.value_or("R1"));
    for (std::size_t i = 0; i < set.runs.size(); ++i) {
      const RunRecord& r = set.runs[i];
      if (!r.freeze || replay_class_for(r.family) != cls) continue;
      auto it = set.manifests.find(r.task_id);
      bundles.push_back(build_bundle(r, set.events[i], it == set.manifests.end() ? nullptr : &it->second));
      results.push_back(replay_run(bundles.back()));
    }
  }
  if (f.out.empty()) {
    std::cout << Json(results).dump(2) << "\n";
    return kOk;
  }
  write_json_file(fs::path(f.out) / "replay_results.json", results);
  for (const auto& b : bundles) write_json_file(fs::path(f.out) / "bundles" / (b.run_id + ".bundle.json"), b);
  return kOk;
}

int cmd_report(const Flags& f) {
  const RunSet set = read_runset(f.runset);
  const GateOutputs g = read_gate(f.gate);
  write_reports(f.out, build_reports(set, g), g);
  return kOk;
}

int cmd_study(const Flags& f) {
  StudyGrid grid = study_grid(f.grid, f.seed_base);
  if (f.setting) grid.settings = {parse_enum<SettingLabel>(*f.setting)};
  fs::path root_dir = f.release_root;
  if (root_dir.empty()) {
    root_dir = fs::path(f.out) / "release_root";
    write_demo_root(root_dir);
  }
  const ReleaseRoot root = ManifestStore(root_dir).load_root();
  RunPlan plan = build_study_plan(grid, root.root_id);
  if (f.strict_schema) plan.schema_mode = SchemaMode::strict;
  const RunSet set = run_and_write(plan, root_dir, f);
  const GateOutputs g = gate_and_write(set, root, f.out);
  write_reports(f.out, build_reports(set, g), g);
  return validator_rejected(set) ? kValidator : kOk;
}

int cmd_all(const Flags& f) {
  const RunSet set = run_and_write(load_plan(f), f.release_root, f);
  const GateOutputs g = gate_and_write(set, set.root, f.out);
  write_reports(f.out, build_reports(set, g), g);
  return validator_rejected(set) ? kValidator : kOk;
}

void error_record(const std::string& code, const std::string& detail) {
  std::cerr << Json{{"error", code}, {"detail", detail}}.dump() << "\n";
}

}  // namespace

int dispatch(int argc, char** argv) {
  CLI::App app{"gatebench: evidence-gated agent benchmark harness"};
  app.require_subcommand(1);
  Flags f;

  auto* init = app.add_subcommand("init-root", "Write the demo release root, manifests and plan");
  init->add_option("--out", f.out, "Output directory")->required();

  auto add_run_flags = [&](CLI::App* c) {
    c->add_option("--plan", f.plan, "Run plan JSON")->required();
    c->add_option("--release-root", f.release_root, "Release root directory")->required();
    c->add_option("--out", f.out, "Output directory")->required();
    c->add_option("--concurrency", f.concurrency, "Host worker threads")->check(CLI::PositiveNumber);
    c->add_option("--setting", f.setting, "Override every entry's operating setting");
    c->add_flag("--strict-schema", f.strict_schema, "Reject unknown event fields");
  };
  auto* run = app.add_subcommand("run", "Execute a run plan and write a runset");
  add_run_flags(run);
  auto* all = app.add_subcommand("all", "run, gate and report in one output directory");
  add_run_flags(all);

  auto* gate = app.add_subcommand("gate", "Admit or reject every run of a runset");
  gate->add_option("--runset", f.runset, "runset.json")->required();
  gate->add_option("--out", f.out, "Output directory")->required();
  gate->add_option("--release-root", f.release_root, "Bind against this root instead of the runset's");

  auto* replay = app.add_subcommand("replay", "Replay a bundle or every run of one class");
  auto* bundle_opt = replay->add_option("--bundle", f.bundle, "Replay bundle JSON");
  auto* runset_opt = replay->add_option("--runset", f.runset, "runset.json");
  bundle_opt->excludes(runset_opt);
  replay->add_option("--class", f.replay_class, "R0, R1 or R2 (default R1)")->needs(runset_opt);
  replay->add_option("--out", f.out, "Output directory (stdout when absent)");

  auto* report = app.add_subcommand("report", "Build reports from admitted rows");
  report->add_option("--runset", f.runset, "runset.json")->required();
  report->add_option("--gate", f.gate, "Gate output directory or gate_report.json")->required();
  report->add_option("--out", f.out, "Output directory")->required();

  auto* study = app.add_subcommand("study", "Run the controller decision-study grid");
  study->add_option("--grid", f.grid, "default or small");
  study->add_option("--seed-base", f.seed_base, "First seed of the grid");
  study->add_option("--out", f.out, "Output directory")->required();
  study->add_option("--release-root", f.release_root, "Release root (demo root written under --out if absent)");
  study->add_option("--concurrency", f.concurrency, "Host worker threads")->check(CLI::PositiveNumber);
  study->add_option("--setting", f.setting, "Restrict the grid to one setting");
  study->add_flag("--strict-schema", f.strict_schema, "Reject unknown event fields");

  if (argc > 1 && argv[1][0] != '-' && !app.get_subcommand_no_throw(argv[1])) {
    error_record("usage", std::string("unknown verb: ") + argv[1]);
    return kUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_record("usage", e.what());
    return kUsage;
  }
  if (replay->parsed() && f.bundle.empty() && f.runset.empty()) {
    error_record("usage", "replay needs --bundle or --runset");
    return kUsage;
  }

  try {
    if (init->parsed()) return cmd_init_root(f);
    if (run->parsed()) return cmd_run(f);
    if (gate->parsed()) return cmd_gate(f);
    if (replay->parsed()) return cmd_replay(f);
    if (report->parsed()) return cmd_report(f);
    if (study->parsed()) return cmd_study(f);
    if (all->parsed()) return cmd_all(f);
  } catch (const Error& e) {
    error_record(e.code(), e.what());
    return kRuntime;
  } catch (const std::exception& e) {
    error_record("internal", e.what());
    return kRuntime;
  }
  return kUsage;
}

}  // namespace gatebench
