#pragma once

#include <stdexcept>
#include <string>

namespace dielscope {

/// Exception carrying a module-qualified code such as "probe_cal.degenerate".
/// The CLI prints `error: <code>: <message>` on a single line.
class Error : public std::runtime_error {
 public:
  Error(std::string module, std::string code, const std::string& message)
      : std::runtime_error(message),
        module_(std::move(module)),
        code_(std::move(code)) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& code() const noexcept { return code_; }
  std::string qualified_code() const { return module_ + "." + code_; }

 private:
  std::string module_;
  std::string code_;
};

namespace detail {

[[noreturn]] inline void fail(const char* module, const char* code, const std::string& message) {
  throw Error(module, code, message);
}

}  // namespace detail
}  // namespace dielscope
