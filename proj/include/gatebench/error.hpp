#pragma once

#include <stdexcept>
#include <string>

namespace gatebench {

/// Harness error carrying a stable, machine-readable code such as
/// "unresolved_manifest" or "non_canonical_value". The code is what callers
/// and the CLI error record key on; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& detail = {})
      : std::runtime_error(detail.empty() ? code : code + ": " + detail),
        code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace gatebench
