#pragma once

#include <stdexcept>
#include <string>

namespace arpps {

enum class ErrorKind {
  InvalidArgument,  // caller supplied a bad value or spec
  Data,             // input data violates the schema or invariants
  Io,               // file or socket failure
  Runtime,          // anything else
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace arpps
