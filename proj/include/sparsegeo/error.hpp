#pragma once

#include <stdexcept>
#include <string>

namespace sparsegeo {

// Error categories shared with the C API and the CLI exit codes.
enum class ErrorCode : int {
  config = 2,
  generation = 3,
  certificate = 4,
  divergence = 5,
  io = 6,
  invalid_argument = 7,
  numeric = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace sparsegeo
