#pragma once

#include <stdexcept>
#include <string>

namespace kmbandit {

// Invalid arguments, malformed input files or configs. The CLI maps this to
// exit code 1.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A reservoir draw was requested while the exclusion set covers every arm
// with positive probability.
class NoArmAvailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// The literal overload keeps hot-path checks free of string construction.
inline void require(bool condition, const char* message) {
  if (!condition) throw UsageError(message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw UsageError(message);
}

}  // namespace detail
}  // namespace kmbandit
