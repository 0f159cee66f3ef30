#include "gatebench/trace.hpp"

#include <cstdio>

#include "gatebench/error.hpp"
#include "gatebench/rng.hpp"

namespace gatebench {
namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s, std::size_t pos, const char* code) {
  std::uint64_t v = 0;
  for (std::size_t i = pos; i < pos + 16; ++i) {
    const char c = s[i];
    v <<= 4;
    if (c >= '0' && c <= '9') {
      v |= static_cast<std::uint64_t>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      v |= static_cast<std::uint64_t>(c - 'a' + 10);
    } else {
      throw Error(code, s);
    }
  }
  return v;
}

constexpr std::uint64_t kSpanKey = 0x6a09e667f3bcc909ULL;

}  // namespace

std::string TraceId::hex() const { return hex64(hi) + hex64(lo); }
std::string SpanId::hex() const { return hex64(value); }

TraceContext new_trace_context(std::uint64_t run_seed, std::uint64_t counter) {
  TraceContext ctx;
  ctx.trace_id = TraceId{mix64(run_seed ^ 0x243f6a8885a308d3ULL),
                         mix64(run_seed ^ 0x13198a2e03707344ULL)};
  // mix64 is a bijection and xor with a per-seed key is too, so distinct
  // counters map to distinct span ids.
  ctx.span_id = SpanId{mix64(counter ^ mix64(run_seed ^ kSpanKey))};
  return ctx;
}

TraceId parse_trace_id(const std::string& hex) {
  if (hex.size() != 32) throw Error("invalid_trace_id", hex);
  return TraceId{parse_hex64(hex, 0, "invalid_trace_id"), parse_hex64(hex, 16, "invalid_trace_id")};
}

SpanId parse_span_id(const std::string& hex) {
  if (hex.size() != 16) throw Error("invalid_span_id", hex);
  return SpanId{parse_hex64(hex, 0, "invalid_span_id")};
}

void to_json(Json& j, const TraceContext& t) {
  j = Json{{"trace_id", t.trace_id.hex()}, {"span_id", t.span_id.hex()}};
  if (t.parent_span_id) j["parent_span_id"] = t.parent_span_id->hex();
}

void from_json(const Json& j, TraceContext& t) {
  t.trace_id = parse_trace_id(j.at("trace_id").get<std::string>());
  t.span_id = parse_span_id(j.at("span_id").get<std::string>());
  if (auto it = j.find("parent_span_id"); it != j.end() && !it->is_null()) {
    t.parent_span_id = parse_span_id(it->get<std::string>());
  } else {
    t.parent_span_id.reset();
  }
}

}  // namespace gatebench
