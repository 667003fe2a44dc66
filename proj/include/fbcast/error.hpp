#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fbcast {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// The requested physical model has no closed form here.
class UnsupportedModelError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A policy handed the environment an action that breaks the slot constraints.
class EnvironmentError : public std::runtime_error {
public:
  EnvironmentError(std::size_t slot, const std::string& what)
      : std::runtime_error("slot " + std::to_string(slot) + ": " + what), slot_(slot) {}
  std::size_t slot() const noexcept { return slot_; }

private:
  std::size_t slot_;
};

// NaN/Inf detected during learning.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& what, std::size_t line = 0, std::string field = {})
      : std::runtime_error(what), line_(line), field_(std::move(field)) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

private:
  std::size_t line_;
  std::string field_;
};

}  // namespace fbcast
