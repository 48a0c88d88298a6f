#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mapalign {

/// Error carried through every pipeline stage. `code` is a stable machine
/// identifier (e.g. "dimension_mismatch"); the service maps it onto an HTTP
/// status and echoes {code, message, detail}.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(std::move(code)), detail_(std::move(detail)) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string code_;
  std::string detail_;
};

}  // namespace mapalign
