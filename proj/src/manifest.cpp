#include "gatebench/manifest.hpp"

#include <algorithm>
#include <regex>

#include "gatebench/error.hpp"
#include "gatebench/io.hpp"
#include "json_util.hpp"

namespace gatebench {

using detail::get_opt;
using detail::put_opt;

bool is_semver(const std::string& v) {
  static const std::regex re(R"(^(0|[1-9]\d*)\.(0|[1-9]\d*)\.(0|[1-9]\d*)$)");
  return std::regex_match(v, re);
}

Digest TaskManifest::hash() const { return canonical_hash(Json(*this)); }

void check_manifest(const TaskManifest& m) {
  if (m.task_id.empty()) throw Error("invalid_manifest", "empty task_id");
  if (m.verifier_id.empty()) throw Error("invalid_manifest", m.task_id + ": empty verifier_id");
  if (!is_semver(m.adapter_version) || !is_semver(m.schema_version)) {
    throw Error("invalid_manifest", m.task_id + ": version is not major.minor.patch");
  }
  if (m.replay_class != replay_class_for(m.family)) {
    throw Error("replay_class_mismatch", m.task_id + ": " + std::string(to_string(m.family)) +
                                             " requires " +
                                             std::string(to_string(replay_class_for(m.family))));
  }
  if (!m.family_params.is_object()) throw Error("invalid_manifest", m.task_id + ": family_params");
}

bool ReleaseRoot::registers(const Digest& manifest_hash) const {
  return std::any_of(registry.begin(), registry.end(),
                     [&](const auto& kv) { return kv.second == manifest_hash; });
}

std::filesystem::path ManifestStore::manifest_path(const std::string& task_id) const {
  return dir_ / "manifests" / (task_id + ".json");
}

void ManifestStore::save(const TaskManifest& m) const { write_json_file(manifest_path(m.task_id), m); }

TaskManifest ManifestStore::load(const std::string& task_id) const {
  const auto path = manifest_path(task_id);
  if (!std::filesystem::exists(path)) throw Error("unresolved_manifest", task_id);
  return read_json_file(path).get<TaskManifest>();
}

void ManifestStore::save_root(const ReleaseRoot& root) const { write_json_file(registry_path(), root); }

ReleaseRoot ManifestStore::load_root() const {
  if (!std::filesystem::exists(registry_path())) {
    throw Error("missing_release_root", registry_path().string());
  }
  return read_json_file(registry_path()).get<ReleaseRoot>();
}

ReleaseRoot make_release_root(std::string root_id, const std::vector<TaskManifest>& manifests,
                              std::string created_at) {
  ReleaseRoot root{std::move(root_id), {}, std::move(created_at)};
  for (const auto& m : manifests) {
    check_manifest(m);
    if (!root.registry.emplace(m.task_id, m.hash()).second) {
      throw Error("duplicate_task_id", m.task_id);
    }
  }
  return root;
}

TaskManifest resolve_manifest(const std::string& task_id, const ReleaseRoot& root,
                              const ManifestStore& store) {
  const auto it = root.registry.find(task_id);
  if (it == root.registry.end()) throw Error("unresolved_manifest", task_id);
  TaskManifest m;
  try {
    m = store.load(task_id);
  } catch (const Error& e) {
    if (e.code() == "unresolved_manifest") throw;
    // An unparsable file no longer matches what was registered.
    throw Error("registry_hash_mismatch", task_id);
  } catch (const std::exception&) {
    throw Error("registry_hash_mismatch", task_id);
  }
  if (m.task_id != task_id || m.hash() != it->second) {
    throw Error("registry_hash_mismatch", task_id);
  }
  check_manifest(m);
  m.resolved = true;
  return m;
}

FreezeRecord freeze_run(const TaskManifest& manifest, const DriverRecord& driver,
                        const std::string& setting_label, const SuiteVersions& versions) {
  if (!manifest.resolved) throw Error("unresolved_manifest", manifest.task_id);
  if (driver.driver_id.empty() || driver.driver_version.empty() || driver.parser_version.empty()) {
    throw Error("undeclared_driver", driver.driver_id);
  }

  const Json& params = manifest.family_params;
  std::string verifier_version;
  if (auto it = params.find("verifier_version"); it != params.end() && it->is_string()) {
    verifier_version = it->get<std::string>();
  }
  if (verifier_version.empty()) {
    if (manifest.family == Family::code) {
      throw Error("incomplete_freeze", manifest.task_id + ": code family requires verifier_version");
    }
    verifier_version = manifest.verifier_id + "@" + manifest.adapter_version;
  }

  FreezeRecord f;
  f.suite_version = versions.suite_version;
  f.manifest_hash = manifest.hash();
  f.driver_id = driver.driver_id;
  f.driver_version = driver.driver_version;
  f.model_backend_id = driver.model_backend_id;
  f.prompt_template_hash = driver.prompt_template_hash;
  f.parser_version = driver.parser_version;
  f.snapshot_digest = canonical_hash(Json{{"snapshot_ref", manifest.snapshot_ref}});
  if (manifest.family == Family::code) {
    if (auto it = params.find("repo_state"); it != params.end() && it->is_string()) {
      f.repo_commit = it->get<std::string>();
    }
  }
  f.verifier_version = verifier_version;
  f.schema_version = versions.schema_version;
  f.replay_harness_version = versions.replay_harness_version;
  f.setting_label = setting_label;
  f.seed_policy = versions.seed_policy;
  return f;
}

std::vector<std::string> freeze_gaps(const FreezeRecord& f) {
  std::vector<std::string> gaps;
  auto need = [&](bool ok, const char* name) {
    if (!ok) gaps.emplace_back(name);
  };
  need(!f.suite_version.empty(), "suite_version");
  need(!f.manifest_hash.empty(), "manifest_hash");
  need(!f.driver_id.empty(), "driver_id");
  need(!f.driver_version.empty(), "driver_version");
  need(!f.parser_version.empty(), "parser_version");
  need(!f.snapshot_digest.empty(), "snapshot_digest");
  need(!f.verifier_version.empty(), "verifier_version");
  need(!f.schema_version.empty(), "schema_version");
  need(!f.replay_harness_version.empty(), "replay_harness_version");
  need(!f.setting_label.empty(), "setting_label");
  need(!f.seed_policy.empty(), "seed_policy");
  return gaps;
}

void to_json(Json& j, const TaskManifest& m) {
  j = Json{{"family", m.family},
           {"task_id", m.task_id},
           {"snapshot_ref", m.snapshot_ref},
           {"reset_contract", m.reset_contract},
           {"verifier_id", m.verifier_id},
           {"adapter_version", m.adapter_version},
           {"replay_class", m.replay_class},
           {"schema_version", m.schema_version},
           {"release_binding", m.release_binding},
           {"family_params", m.family_params}};
}

void from_json(const Json& j, TaskManifest& m) {
  const auto family = try_parse_enum<Family>(j.at("family").get<std::string>());
  if (!family) throw Error("unsupported_family", j.at("family").get<std::string>());
  m.family = *family;
  m.task_id = j.at("task_id").get<std::string>();
  m.snapshot_ref = j.at("snapshot_ref").get<std::string>();
  m.reset_contract = j.at("reset_contract").get<ResetContract>();
  m.verifier_id = j.at("verifier_id").get<std::string>();
  m.adapter_version = j.at("adapter_version").get<std::string>();
  m.replay_class = j.at("replay_class").get<ReplayClass>();
  m.schema_version = j.at("schema_version").get<std::string>();
  m.release_binding = j.at("release_binding").get<std::string>();
  m.family_params = j.value("family_params", Json::object());
  m.resolved = false;
}

void to_json(Json& j, const FreezeRecord& f) {
  j = Json{{"suite_version", f.suite_version},
           {"manifest_hash", f.manifest_hash},
           {"driver_id", f.driver_id},
           {"driver_version", f.driver_version},
           {"parser_version", f.parser_version},
           {"snapshot_digest", f.snapshot_digest},
           {"verifier_version", f.verifier_version},
           {"schema_version", f.schema_version},
           {"replay_harness_version", f.replay_harness_version},
           {"setting_label", f.setting_label},
           {"seed_policy", f.seed_policy}};
  put_opt(j, "model_backend_id", f.model_backend_id);
  put_opt(j, "prompt_template_hash", f.prompt_template_hash);
  put_opt(j, "repo_commit", f.repo_commit);
}

void from_json(const Json& j, FreezeRecord& f) {
  f.suite_version = j.at("suite_version").get<std::string>();
  f.manifest_hash = j.at("manifest_hash").get<Digest>();
  f.driver_id = j.at("driver_id").get<std::string>();
  f.driver_version = j.at("driver_version").get<std::string>();
  f.parser_version = j.at("parser_version").get<std::string>();
  f.snapshot_digest = j.at("snapshot_digest").get<Digest>();
  f.verifier_version = j.at("verifier_version").get<std::string>();
  f.schema_version = j.at("schema_version").get<std::string>();
  f.replay_harness_version = j.at("replay_harness_version").get<std::string>();
  f.setting_label = j.at("setting_label").get<std::string>();
  f.seed_policy = j.at("seed_policy").get<std::string>();
  get_opt(j, "model_backend_id", f.model_backend_id);
  get_opt(j, "prompt_template_hash", f.prompt_template_hash);
  get_opt(j, "repo_commit", f.repo_commit);
}

void to_json(Json& j, const ReleaseRoot& r) {
  Json reg = Json::object();
  for (const auto& [task, hash] : r.registry) reg[task] = hash;
  j = Json{{"root_id", r.root_id}, {"registry", reg}, {"created_at", r.created_at}};
}

void from_json(const Json& j, ReleaseRoot& r) {
  r.root_id = j.at("root_id").get<std::string>();
  r.created_at = j.at("created_at").get<std::string>();
  r.registry.clear();
  for (const auto& [task, hash] : j.at("registry").items()) {
    r.registry.emplace(task, hash.get<Digest>());
  }
}

}  // namespace gatebench
