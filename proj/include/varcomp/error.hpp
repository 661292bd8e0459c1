#ifndef VARCOMP_ERROR_HPP
#define VARCOMP_ERROR_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace varcomp {

/// Base of every exception thrown by the library. `code()` is a stable
/// upper-case tag (e.g. `NO_REFERENCE`) that front ends can print verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Bad or inconsistent input: violated preconditions, malformed documents.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A solver could not produce a result from valid input.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace varcomp

#endif  // VARCOMP_ERROR_HPP
