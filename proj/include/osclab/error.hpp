#pragma once

#include <stdexcept>
#include <string>

namespace osclab {

/// Invalid parameters or configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)), message_(what) {}

  const std::string& key() const noexcept { return key_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string key_;
  std::string message_;
};

/// The model or law does not provide the requested capability
/// (e.g. a conditional CDF for a law without a closed-form CDF). Exit code 3.
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied object broke its contract (e.g. a non-monotone CDF).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace osclab
