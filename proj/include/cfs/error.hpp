#pragma once

#include <stdexcept>
#include <string>

namespace cfs {

/// Failure categories. The CLI maps each one onto a distinct exit code.
enum class ErrorKind {
  kInput,       // malformed or unsupported input data
  kDimension,   // shape mismatch or k out of range
  kDegenerate,  // single-class treatment, empty group, ...
  kConfig,      // configuration violates an invariant
  kIo,          // unreadable or unwritable file
  kDomain,      // argument outside a function's domain
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cfs
