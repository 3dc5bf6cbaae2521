#pragma once

#include <stdexcept>
#include <string>

namespace ecg {

/// Exception tagged with a module-specific error kind enum.
template <typename K>
class Error : public std::runtime_error {
 public:
  using Kind = K;

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Non-fatal finding attached to an otherwise successful result.
template <typename Kind>
struct Diagnostic {
  Kind kind;
  std::string message;
};

}  // namespace ecg
