#pragma once

#include <stdexcept>
#include <string>

namespace wsn {

/// Invalid or missing configuration value. `field()` carries the dotted path
/// of the offending key, e.g. "network.node_count".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Every node is dead; the network can no longer build a hierarchy.
class NoAliveNodes : public std::runtime_error {
 public:
  NoAliveNodes() : std::runtime_error("no alive nodes left in the network") {}
};

class EmptySeries : public std::invalid_argument {
 public:
  EmptySeries() : std::invalid_argument("metrics series is empty") {}
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wsn
