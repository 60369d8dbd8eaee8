#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace lsnn {

// Precondition violated by a caller (bad sizes, degenerate boxes, unknown names).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A loss, gradient or state became NaN/Inf. `iteration` is -1 outside training.
class NonFiniteError : public std::runtime_error {
 public:
  explicit NonFiniteError(const std::string& what, long iteration = -1)
      : std::runtime_error(what), iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

class CflViolation : public std::runtime_error {
 public:
  CflViolation(const std::string& what, double advisory_dt)
      : std::runtime_error(what), advisory_dt_(advisory_dt) {}
  double advisory_dt() const noexcept { return advisory_dt_; }

 private:
  double advisory_dt_;
};

// Configuration problem; `field` is a dotted path into the config document.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class UnimplementedCase : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace lsnn
