#pragma once

#include <stdexcept>
#include <string>

namespace symperc {

// Raised when a request exceeds a hard-validated capability limit
// (e.g. exhaustive enumeration above the dimension cap), as opposed to a
// malformed argument.
class capability_error : public std::runtime_error {
 public:
  explicit capability_error(const std::string& what) : std::runtime_error(what) {}
};

// Raised when an experiment configuration fails validation.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace symperc
