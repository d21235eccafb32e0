#pragma once

#include <stdexcept>
#include <string>

namespace ngmeet {

/// Broad failure class; the CLI maps each one to an exit code.
enum class ErrorKind {
  Usage = 1,      ///< bad arguments or configuration
  Data = 2,       ///< unreadable, malformed or inconsistent input data
  Numerical = 3,  ///< decomposition failure, NaN/Inf in an intermediate
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error usage_error(const std::string& what) { return Error(ErrorKind::Usage, what); }
inline Error data_error(const std::string& what) { return Error(ErrorKind::Data, what); }
inline Error numerical_error(const std::string& what) { return Error(ErrorKind::Numerical, what); }

}  // namespace ngmeet
