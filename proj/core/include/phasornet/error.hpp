#pragma once

#include <stdexcept>
#include <string>

namespace phasornet {

// All recoverable failures in the library surface as this exception type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace phasornet

#define PHASORNET_CHECK(cond, msg)                        \
  do {                                                    \
    if (!(cond)) throw ::phasornet::Error(std::string(msg)); \
  } while (false)
