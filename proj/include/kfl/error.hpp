#pragma once

#include <stdexcept>
#include <string>

namespace kfl {

/// Failure categories, mapped one-to-one onto CLI exit codes.
enum class ErrorKind {
    Config = 1,       // malformed or out-of-range configuration
    Solver = 2,       // a numerical solve failed to converge or produced NaN
    Acceptance = 3,   // a requested acceptance threshold was not met
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) throw Error(kind, what);
}

}  // namespace kfl
