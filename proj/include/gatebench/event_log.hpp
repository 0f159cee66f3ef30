#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gatebench/events.hpp"
#include "gatebench/validator.hpp"

namespace gatebench {

/// Newline-delimited JSON event log. Line one is a header
/// {"format":"gatebench-events","schema_version":"1.0.0"}; each following
/// line is one EventRecord, ordered by sequence.
std::string serialize_event_log(const std::vector<EventRecord>& events);
void write_event_log(const std::filesystem::path& path, const std::vector<EventRecord>& events);

/// Throws Error("malformed_event_log") on a bad header or unparsable line and
/// Error("unsupported_schema_version") on a foreign header version.
std::vector<Json> read_event_log_documents(const std::filesystem::path& path);
std::vector<EventRecord> read_event_log(const std::filesystem::path& path);

struct LogValidation {
  bool trace_complete = false;
  std::size_t first_failure = 0;  // index of first rejected event, when any
  ValidationReport failure;
};

/// Runs every event through one RunValidationState and requires a closed
/// run (run_end seen, no open episodes).
LogValidation validate_event_log(const std::vector<EventRecord>& events,
                                 SchemaMode mode = SchemaMode::strict);

}  // namespace gatebench
