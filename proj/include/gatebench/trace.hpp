#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

#include "gatebench/digest.hpp"

namespace gatebench {

struct TraceId {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;
  std::string hex() const;
  friend auto operator<=>(const TraceId&, const TraceId&) = default;
};

struct SpanId {
  std::uint64_t value = 0;
  std::string hex() const;
  friend auto operator<=>(const SpanId&, const SpanId&) = default;
};

/// Trace/span identity with W3C Trace Context field semantics (128-bit trace,
/// 64-bit span, optional parent). Wire-level traceparent encoding is not
/// produced; identifiers serialize as lowercase hex.
struct TraceContext {
  TraceId trace_id;
  SpanId span_id;
  std::optional<SpanId> parent_span_id;

  friend bool operator==(const TraceContext&, const TraceContext&) = default;
};

/// Deterministic in (run_seed, counter). All counters under one seed share the
/// trace id; span ids are a bijection of the counter, so they never collide
/// within a run.
TraceContext new_trace_context(std::uint64_t run_seed, std::uint64_t counter);

/// Parses 32/16 lowercase hex digits; throws Error("invalid_trace_id").
TraceId parse_trace_id(const std::string& hex);
SpanId parse_span_id(const std::string& hex);

void to_json(Json& j, const TraceContext& t);
void from_json(const Json& j, TraceContext& t);

}  // namespace gatebench
