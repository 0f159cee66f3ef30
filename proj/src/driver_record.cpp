#include "gatebench/driver_record.hpp"

#include "json_util.hpp"

namespace gatebench {

using detail::get_opt;
using detail::put_opt;

std::vector<std::string> driver_metadata_gaps(const DriverRecord& d) {
  std::vector<std::string> gaps;
  if (d.driver_id.empty()) gaps.emplace_back("driver_id");
  if (d.driver_version.empty()) gaps.emplace_back("driver_version");
  if (d.parser_version.empty()) gaps.emplace_back("parser_version");
  if (d.setting_label.empty()) gaps.emplace_back("setting_label");
  if (d.budget < 1) gaps.emplace_back("budget");
  if (d.driver_type == DriverType::llm) {
    if (!d.model_family || d.model_family->empty()) gaps.emplace_back("model_family");
    if (!d.backend_engine || d.backend_engine->empty()) gaps.emplace_back("backend_engine");
  }
  if (d.driver_type == DriverType::controller && !d.controller_variant) {
    gaps.emplace_back("controller_variant");
  }
  return gaps;
}

void to_json(Json& j, const DriverRecord& d) {
  j = Json{{"driver_id", d.driver_id},
           {"driver_type", d.driver_type},
           {"driver_version", d.driver_version},
           {"parser_version", d.parser_version},
           {"budget", d.budget},
           {"seed", d.seed},
           {"setting_label", d.setting_label},
           {"evidence_status", d.evidence_status},
           {"retry_budget", d.retry_budget}};
  put_opt(j, "model_family", d.model_family);
  put_opt(j, "model_backend_id", d.model_backend_id);
  put_opt(j, "backend_engine", d.backend_engine);
  put_opt(j, "prompt_template_hash", d.prompt_template_hash);
  put_opt(j, "tokenizer_hash", d.tokenizer_hash);
  put_opt(j, "model_revision", d.model_revision);
  put_opt(j, "controller_variant", d.controller_variant);
}

void from_json(const Json& j, DriverRecord& d) {
  d.driver_id = j.at("driver_id").get<std::string>();
  d.driver_type = j.at("driver_type").get<DriverType>();
  d.driver_version = j.at("driver_version").get<std::string>();
  d.parser_version = j.at("parser_version").get<std::string>();
  d.budget = j.at("budget").get<std::uint32_t>();
  d.seed = j.at("seed").get<std::uint64_t>();
  d.setting_label = j.at("setting_label").get<std::string>();
  d.evidence_status = j.at("evidence_status").get<EvidenceStatus>();
  d.retry_budget = j.value("retry_budget", 2u);
  get_opt(j, "model_family", d.model_family);
  get_opt(j, "model_backend_id", d.model_backend_id);
  get_opt(j, "backend_engine", d.backend_engine);
  get_opt(j, "prompt_template_hash", d.prompt_template_hash);
  get_opt(j, "tokenizer_hash", d.tokenizer_hash);
  get_opt(j, "model_revision", d.model_revision);
  get_opt(j, "controller_variant", d.controller_variant);
}

}  // namespace gatebench
