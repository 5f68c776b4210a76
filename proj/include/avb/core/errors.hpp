#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace avb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class MissingModelFit : public Error {
public:
  explicit MissingModelFit(const std::string &model_id)
      : Error("no fit supplied for model '" + model_id + "'"),
        model_id_(model_id) {}
  [[nodiscard]] const std::string &model_id() const noexcept { return model_id_; }

private:
  std::string model_id_;
};

class NonFiniteObjective : public Error {
public:
  using Error::Error;
};

class DegenerateBox : public Error {
public:
  using Error::Error;
};

class OutOfSupport : public Error {
public:
  using Error::Error;
};

class AbsoluteContinuityError : public Error {
public:
  using Error::Error;
};

class ShapeError : public Error {
public:
  using Error::Error;
};

class CapacityError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

/// Raised when a closed-form update produces a singular or non-finite factor.
class NumericalBreakdown : public Error {
public:
  NumericalBreakdown(const std::string &what, std::size_t iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  [[nodiscard]] std::size_t iteration() const noexcept { return iteration_; }

private:
  std::size_t iteration_;
};

class ParseError : public Error {
public:
  ParseError(const std::string &what, std::size_t line)
      : Error(what + " at line " + std::to_string(line)), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

} // namespace avb
