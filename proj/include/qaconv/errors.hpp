#pragma once

#include <stdexcept>
#include <string>

namespace qaconv {

// Error taxonomy shared by the library and the CLI. The CLI maps each
// class to a distinct process exit code (see tools/).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

class ProfileMismatch : public std::runtime_error {
 public:
  explicit ProfileMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

class PreconditionError : public std::runtime_error {
 public:
  explicit PreconditionError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int format = 2;
inline constexpr int profile_mismatch = 3;
inline constexpr int precondition = 4;
}  // namespace exit_code

}  // namespace qaconv
