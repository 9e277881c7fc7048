#pragma once

#include <stdexcept>
#include <string>

namespace pptlab {

// All recoverable failures in the library surface as this exception type.
// Messages start with a stable phrase so callers and tests can match on it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pptlab
