#pragma once

#include <stdexcept>
#include <string>

namespace scalemart {

// Error categories map onto CLI exit codes: argument 1, data 2, resource 3.
enum class ErrorKind {
  Argument,
  Domain,
  Numeric,
  Truncation,
  Resource,
  Data,
  Format,
  Coverage,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::Argument, what);
}

}  // namespace scalemart
