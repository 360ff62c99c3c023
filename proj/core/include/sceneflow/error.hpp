#pragma once

#include <stdexcept>
#include <string>

namespace sceneflow {

enum class ErrorKind {
  kInvalidArgument,
  kDimension,
  kIo,
  kNumerical,
};

/// Exception type thrown by every stage of the library.  The kind maps onto
/// the command line tool's exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_error(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace sceneflow
