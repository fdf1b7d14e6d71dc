#pragma once

#include <stdexcept>
#include <string>

namespace mlcur {

/// Error raised for invalid inputs, file problems and diverged solves.
/// The C API translates these into error codes plus a message string.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& what) { throw Error(what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(what);
}

}  // namespace mlcur
