#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace pcaai {

// Malformed input document (JSON/CSV syntax, missing keys, bad types).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structural problem inside a circuit, tagged with the offending unit id when known.
class CircuitError : public std::runtime_error {
 public:
  explicit CircuitError(const std::string& what, std::optional<std::int64_t> unit = std::nullopt)
      : std::runtime_error(unit ? "unit " + std::to_string(*unit) + ": " + what : what), unit_(unit) {}

  std::optional<std::int64_t> unit() const noexcept { return unit_; }

 private:
  std::optional<std::int64_t> unit_;
};

// Argument outside an operation's domain (negative probability, bad fraction, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical result is undefined for a specific instance (zero probability under
// an approximation, baseline underflow, ...).
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, std::size_t instance)
      : std::runtime_error(what + " (instance " + std::to_string(instance) + ")"), instance_(instance) {}

  std::size_t instance() const noexcept { return instance_; }

 private:
  std::size_t instance_;
};

}  // namespace pcaai
