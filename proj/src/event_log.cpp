#include "gatebench/event_log.hpp"

#include <fstream>
#include <sstream>

#include "gatebench/error.hpp"
#include "gatebench/io.hpp"

namespace gatebench {

std::string serialize_event_log(const std::vector<EventRecord>& events) {
  std::ostringstream out;
  out << Json{{"format", "gatebench-events"}, {"schema_version", kSchemaVersion}}.dump() << '\n';
  for (const auto& e : events) out << Json(e).dump() << '\n';
  return out.str();
}

void write_event_log(const std::filesystem::path& path, const std::vector<EventRecord>& events) {
  write_text_file(path, serialize_event_log(events));
}

std::vector<Json> read_event_log_documents(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("unreadable_file", path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("malformed_event_log", "missing header");
  Json header;
  try {
    header = Json::parse(line);
  } catch (const Json::exception&) {
    throw Error("malformed_event_log", "bad header");
  }
  if (!header.is_object() || header.value("format", "") != "gatebench-events") {
    throw Error("malformed_event_log", "bad header");
  }
  if (!is_supported_schema_version(header.value("schema_version", ""))) {
    throw Error("unsupported_schema_version", header.value("schema_version", ""));
  }
  std::vector<Json> docs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      docs.push_back(Json::parse(line));
    } catch (const Json::exception&) {
      throw Error("malformed_event_log", "line " + std::to_string(docs.size() + 2));
    }
  }
  return docs;
}

std::vector<EventRecord> read_event_log(const std::filesystem::path& path) {
  std::vector<EventRecord> events;
  for (const auto& doc : read_event_log_documents(path)) {
    try {
      events.push_back(doc.get<EventRecord>());
    } catch (const Json::exception& ex) {
      throw Error("malformed_event_log", ex.what());
    }
  }
  return events;
}

LogValidation validate_event_log(const std::vector<EventRecord>& events, SchemaMode mode) {
  LogValidation out;
  RunValidationState state(mode);
  for (std::size_t i = 0; i < events.size(); ++i) {
    auto report = validate_event(events[i], state);
    if (!report.ok()) {
      out.first_failure = i;
      out.failure = std::move(report);
      return out;
    }
  }
  if (!state.ended() || state.open_episodes() != 0) {
    out.first_failure = events.size();
    out.failure.violations.push_back({"boundary_mismatch", "run not closed"});
    return out;
  }
  out.trace_complete = true;
  return out;
}

}  // namespace gatebench
