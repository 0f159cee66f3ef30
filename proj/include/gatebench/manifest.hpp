#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "gatebench/digest.hpp"
#include "gatebench/driver_record.hpp"
#include "gatebench/enums.hpp"

namespace gatebench {

/// Default version identifiers of the release.
struct SuiteVersions {
  std::string manifest_version = "v1";
  std::string suite_version = "0.1.0";
  std::string schema_version = "1.0.0";
  std::string replay_harness_version = "0.1.0";
  std::string seed_policy = "fixed-per-entry";
};

bool is_semver(const std::string& v);

struct TaskManifest {
  Family family = Family::micro;
  std::string task_id;
  std::string snapshot_ref;
  ResetContract reset_contract = ResetContract::full_reset;
  std::string verifier_id;
  std::string adapter_version = "0.1.0";
  ReplayClass replay_class = ReplayClass::R0;
  std::string schema_version = "1.0.0";
  std::string release_binding;
  /// Family-specific parameters (code: repo_state, patch_semantics,
  /// test_command, verifier_version; web: session_config,
  /// evaluator_semantics, exec_mode; micro: collector_config). Optional
  /// "goal" overrides the family default.
  Json family_params = Json::object();

  /// Set by resolve_manifest; not part of the hashed content.
  bool resolved = false;

  Digest hash() const;

  friend bool operator==(const TaskManifest& a, const TaskManifest& b) {
    return a.family == b.family && a.task_id == b.task_id && a.snapshot_ref == b.snapshot_ref &&
           a.reset_contract == b.reset_contract && a.verifier_id == b.verifier_id &&
           a.adapter_version == b.adapter_version && a.replay_class == b.replay_class &&
           a.schema_version == b.schema_version && a.release_binding == b.release_binding &&
           a.family_params == b.family_params;
  }
};

/// Throws Error("replay_class_mismatch") when the class disagrees with the
/// family mapping and Error("invalid_manifest") for other contract breaks.
void check_manifest(const TaskManifest& m);

struct FreezeRecord {
  std::string suite_version;
  Digest manifest_hash;
  std::string driver_id;
  std::string driver_version;
  std::optional<std::string> model_backend_id;
  std::optional<Digest> prompt_template_hash;
  std::string parser_version;
  Digest snapshot_digest;
  std::optional<std::string> repo_commit;
  std::string verifier_version;
  std::string schema_version;
  std::string replay_harness_version;
  std::string setting_label;
  std::string seed_policy;

  friend bool operator==(const FreezeRecord&, const FreezeRecord&) = default;
};

struct ReleaseRoot {
  std::string root_id;
  std::map<std::string, Digest> registry;  // task_id -> manifest hash
  std::string created_at;                  // ISO-8601 UTC

  bool registers(const Digest& manifest_hash) const;
};

/// One JSON file per manifest under <dir>/manifests/, plus <dir>/registry.json
/// for the release root.
class ManifestStore {
 public:
  explicit ManifestStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path manifest_path(const std::string& task_id) const;
  std::filesystem::path registry_path() const { return dir_ / "registry.json"; }

  void save(const TaskManifest& m) const;
  /// Throws Error("unresolved_manifest") when the file is absent.
  TaskManifest load(const std::string& task_id) const;

  void save_root(const ReleaseRoot& root) const;
  ReleaseRoot load_root() const;

 private:
  std::filesystem::path dir_;
};

/// Builds a root registering every manifest by its canonical hash.
ReleaseRoot make_release_root(std::string root_id, const std::vector<TaskManifest>& manifests,
                              std::string created_at);

/// Loads the manifest registered for task_id and checks its hash.
/// Errors: "unresolved_manifest", "registry_hash_mismatch".
TaskManifest resolve_manifest(const std::string& task_id, const ReleaseRoot& root,
                              const ManifestStore& store);

/// Pure function of its arguments. Errors: "unresolved_manifest",
/// "undeclared_driver", "incomplete_freeze" (code family without a verifier
/// version).
FreezeRecord freeze_run(const TaskManifest& manifest, const DriverRecord& driver,
                        const std::string& setting_label, const SuiteVersions& versions = {});

/// Names of empty mandatory freeze fields.
std::vector<std::string> freeze_gaps(const FreezeRecord& f);

void to_json(Json& j, const TaskManifest& m);
void from_json(const Json& j, TaskManifest& m);
void to_json(Json& j, const FreezeRecord& f);
void from_json(const Json& j, FreezeRecord& f);
void to_json(Json& j, const ReleaseRoot& r);
void from_json(const Json& j, ReleaseRoot& r);

}  // namespace gatebench
