#pragma once

#include <stdexcept>
#include <string>

namespace armlab {

/// Invalid experiment, instance, or agent parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Caller violated an operation's precondition (e.g. arm out of range).
class UsageError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Persisted or in-memory data is inconsistent with what produced it.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace armlab
