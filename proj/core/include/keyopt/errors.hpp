#pragma once

#include <stdexcept>
#include <string>

namespace keyopt {

// Every failure mode the library reports, so callers can branch on the
// kind instead of parsing message text.
enum class ErrorKind {
  FileUnreadable,
  MalformedHeader,
  EmptyCloud,
  ZeroDiameter,
  InvalidArgument,
  InvalidRotation,
  CoincidentPoints,
  DegenerateGeometry,
  NonFiniteValue,
  ConfigInvalid,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace keyopt
