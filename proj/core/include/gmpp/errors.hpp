#pragma once

#include <stdexcept>
#include <string>

namespace gmpp {

// A precondition of an operation was not met by the caller.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A configuration value lies outside the range an algorithm is defined for.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numeric argument lies outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// predict/observe were called out of order.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace gmpp
