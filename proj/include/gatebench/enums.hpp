#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "gatebench/digest.hpp"
#include "gatebench/error.hpp"

namespace gatebench {

// Every closed vocabulary in the harness is an enum with a name table.
// enum_names<E>() returns the table; to_string/parse_enum go through it.
template <typename E>
struct EnumNames;

#define GATEBENCH_ENUM_NAMES(E, ...)                                       \
  template <>                                                              \
  struct EnumNames<E> {                                                    \
    static constexpr auto table = std::to_array<std::pair<E, std::string_view>>({__VA_ARGS__}); \
    static constexpr std::string_view type_name = #E;                      \
  }

template <typename E>
constexpr std::string_view to_string(E value) {
  for (const auto& [v, name] : EnumNames<E>::table) {
    if (v == value) return name;
  }
  return "?";
}

template <typename E>
std::optional<E> try_parse_enum(std::string_view text) {
  for (const auto& [v, name] : EnumNames<E>::table) {
    if (name == text) return v;
  }
  return std::nullopt;
}

template <typename E>
E parse_enum(std::string_view text) {
  if (auto v = try_parse_enum<E>(text)) return *v;
  throw Error("invalid_enum", std::string(EnumNames<E>::type_name) + " '" + std::string(text) + "'");
}

template <typename E>
constexpr auto enum_values() {
  std::array<E, EnumNames<E>::table.size()> out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = EnumNames<E>::table[i].first;
  return out;
}

enum class Family { micro, web, code };
GATEBENCH_ENUM_NAMES(Family, {Family::micro, "micro"}, {Family::web, "web"}, {Family::code, "code"});

enum class ReplayClass { R0, R1, R2 };
GATEBENCH_ENUM_NAMES(ReplayClass, {ReplayClass::R0, "R0"}, {ReplayClass::R1, "R1"},
                     {ReplayClass::R2, "R2"});

/// Family to replay-class mapping: micro summary replay, web event-trace
/// replay, code snapshot/manifest replay.
constexpr ReplayClass replay_class_for(Family family) {
  switch (family) {
    case Family::micro: return ReplayClass::R0;
    case Family::web: return ReplayClass::R1;
    case Family::code: return ReplayClass::R2;
  }
  return ReplayClass::R0;
}

enum class EventKind {
  run_start,
  run_end,
  episode_start,
  episode_end,
  model_request_start,
  model_request_end,
  action_parsed,
  env_step_start,
  env_step_end,
  tool_call,
  verifier_outcome,
  retry,
  error,
  terminal_result,
};
GATEBENCH_ENUM_NAMES(EventKind, {EventKind::run_start, "run_start"}, {EventKind::run_end, "run_end"},
                     {EventKind::episode_start, "episode_start"},
                     {EventKind::episode_end, "episode_end"},
                     {EventKind::model_request_start, "model_request_start"},
                     {EventKind::model_request_end, "model_request_end"},
                     {EventKind::action_parsed, "action_parsed"},
                     {EventKind::env_step_start, "env_step_start"},
                     {EventKind::env_step_end, "env_step_end"}, {EventKind::tool_call, "tool_call"},
                     {EventKind::verifier_outcome, "verifier_outcome"}, {EventKind::retry, "retry"},
                     {EventKind::error, "error"}, {EventKind::terminal_result, "terminal_result"});

enum class ParseStatus { parsed, invalid, empty };
GATEBENCH_ENUM_NAMES(ParseStatus, {ParseStatus::parsed, "parsed"}, {ParseStatus::invalid, "invalid"},
                     {ParseStatus::empty, "empty"});

enum class OutcomeStatus { success, failure, error };
GATEBENCH_ENUM_NAMES(OutcomeStatus, {OutcomeStatus::success, "success"},
                     {OutcomeStatus::failure, "failure"}, {OutcomeStatus::error, "error"});

enum class ResetContract { full_reset, session_reset, stateless };
GATEBENCH_ENUM_NAMES(ResetContract, {ResetContract::full_reset, "full_reset"},
                     {ResetContract::session_reset, "session_reset"},
                     {ResetContract::stateless, "stateless"});

enum class DriverType { llm, controller, calibration, sanity, scripted };
GATEBENCH_ENUM_NAMES(DriverType, {DriverType::llm, "llm"}, {DriverType::controller, "controller"},
                     {DriverType::calibration, "calibration"}, {DriverType::sanity, "sanity"},
                     {DriverType::scripted, "scripted"});

enum class EvidenceStatus { paper_facing, smoke_only, fixture_backed, diagnostic };
GATEBENCH_ENUM_NAMES(EvidenceStatus, {EvidenceStatus::paper_facing, "paper_facing"},
                     {EvidenceStatus::smoke_only, "smoke_only"},
                     {EvidenceStatus::fixture_backed, "fixture_backed"},
                     {EvidenceStatus::diagnostic, "diagnostic"});

enum class SettingLabel { clean, medium_live_stressed };
GATEBENCH_ENUM_NAMES(SettingLabel, {SettingLabel::clean, "clean"},
                     {SettingLabel::medium_live_stressed, "medium_live_stressed"});

/// The two single-hook controller variants.
enum class HookVariant { hook_a_only, hook_b_only };
GATEBENCH_ENUM_NAMES(HookVariant, {HookVariant::hook_a_only, "hook_a_only"},
                     {HookVariant::hook_b_only, "hook_b_only"});

}  // namespace gatebench

namespace nlohmann {

// JSON (de)serialization for every enum that has a name table.
template <typename E>
  requires requires { gatebench::EnumNames<E>::table; }
struct adl_serializer<E> {
  static void to_json(json& j, E value) { j = std::string(gatebench::to_string(value)); }
  static void from_json(const json& j, E& value) {
    value = gatebench::parse_enum<E>(j.get<std::string>());
  }
};

}  // namespace nlohmann
