#pragma once

#include <stdexcept>
#include <string>

namespace fixlab {

// Invalid parameters: delta outside [0,1), odd n where evenness is required, ...
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The computation is well defined but too large to run: enumeration cap,
// step caps on the simulators.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A result table does not have the columns a consumer expects.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

}  // namespace detail
}  // namespace fixlab
