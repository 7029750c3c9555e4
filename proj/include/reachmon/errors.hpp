#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace reachmon {

// Every anticipated failure is thrown as an Error carrying a stable,
// machine-readable code. The CLI surfaces the code verbatim in its JSON
// error objects, so codes are part of the external contract and must not
// be renamed casually.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace reachmon
