#pragma once

#include <stdexcept>
#include <string>

namespace udrl {

// Raised for contract violations (dimension mismatches, out-of-range actions,
// malformed files). Callers are not expected to recover from these.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace udrl
