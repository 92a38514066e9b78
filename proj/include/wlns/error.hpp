#pragma once

#include <stdexcept>
#include <string>

namespace wlns {

/// Rejected input or violated precondition.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when a simulation produces NaN/Inf or exceeds the velocity ceiling.
class BlowUpError : public Error {
public:
  BlowUpError(const std::string& what, double last_valid_time)
      : Error(what), last_valid_time_(last_valid_time) {}

  double last_valid_time() const noexcept { return last_valid_time_; }

private:
  double last_valid_time_;
};

}  // namespace wlns
