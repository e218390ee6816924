#pragma once

#include <stdexcept>
#include <string>

namespace ahl {

// Bad arguments: dimension mismatches, out-of-range hyperparameters, empty data.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed bytes in any of the on-disk formats (IDX, matrix container, checkpoints, CSV).
class FormatError : public std::runtime_error {
 public:
  enum class Kind { BadMagic, Truncated, CountMismatch, VersionMismatch, CorruptHeader, Io };

  FormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Config validation failure; `field` names the offending key ("section.key").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace ahl
