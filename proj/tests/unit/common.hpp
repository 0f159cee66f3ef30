#pragma once

#include <filesystem>
#include <string>

#include "gatebench/pipeline.hpp"

namespace gbtest {

using namespace gatebench;

inline TaskManifest demo_task(const std::string& task_id) {
  for (auto m : demo_manifests()) {
    if (m.task_id == task_id) {
      m.resolved = true;
      return m;
    }
  }
  throw Error("unresolved_manifest", task_id);
}

inline DriverSpec scripted_driver(std::vector<std::string> names = {"fill"},
                                  EvidenceStatus status = EvidenceStatus::paper_facing) {
  DriverSpec d;
  d.record.driver_id = "scripted-test";
  d.record.driver_type = DriverType::scripted;
  d.record.driver_version = "0.1.0";
  d.record.parser_version = "0.1.0";
  d.record.evidence_status = status;
  for (auto& n : names) d.script.push_back(Action{n, ActionEffect::attempt, 1.0, {}});
  return d;
}

inline DriverSpec llm_driver(SyntheticLlmProfile profile = {}) {
  DriverSpec d;
  d.record.driver_id = "llm-test";
  d.record.driver_type = DriverType::llm;
  d.record.driver_version = "0.1.0";
  d.record.parser_version = "0.1.0";
  d.record.model_family = "synthetic-chat";
  d.record.backend_engine = "vllm";
  d.record.model_backend_id = "vllm-sim";
  d.profile = profile;
  return d;
}

inline DriverSpec calibration_driver(CalibrationMode mode) {
  DriverSpec d;
  d.record.driver_id = mode == CalibrationMode::oracle ? "calib-gold" : "calib-noop";
  d.record.driver_type = DriverType::calibration;
  d.record.driver_version = "0.1.0";
  d.record.parser_version = "0.1.0";
  d.calibration_mode = mode;
  return d;
}

inline RunSpec run_spec(const std::string& task, DriverSpec driver, std::uint32_t episodes = 1,
                        std::uint32_t budget = 8, std::uint32_t actors = 1,
                        SettingLabel setting = SettingLabel::clean, std::uint64_t seed = 7) {
  RunSpec s;
  s.manifest = demo_task(task);
  s.driver = std::move(driver);
  s.setting = OperatingSetting::preset(setting);
  s.seed = seed;
  s.budget = budget;
  s.episodes = episodes;
  s.actors = actors;
  s.release_root = std::string(kDemoRootId);
  return s;
}

/// A scripted, paper-facing web run that the gate admits.
inline RunResult admissible_run() { return execute_run(run_spec("web-form", scripted_driver({"fill", "submit"}), 2)); }

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("gatebench_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::vector<Json> to_docs(const std::vector<EventRecord>& events) {
  std::vector<Json> out;
  for (const auto& e : events) out.push_back(Json(e));
  return out;
}

}  // namespace gbtest
