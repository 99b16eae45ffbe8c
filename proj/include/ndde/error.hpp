#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace ndde {

/// Syntax problems in an expression string. `offset` is a byte offset into
/// the text handed to the parser.
class ParseError : public std::runtime_error {
 public:
  enum class Kind { Syntax, UnknownIdentifier, Arity, NonConstantExponent };

  ParseError(Kind kind, std::size_t offset, const std::string& message)
      : std::runtime_error(message + " (at offset " + std::to_string(offset) + ")"),
        kind_(kind),
        offset_(offset),
        detail_(message) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }
  /// Message without the offset suffix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Kind kind_;
  std::size_t offset_;
  std::string detail_;
};

/// Evaluation left the domain of an elementary function (log of a
/// non-positive number, division by zero, overflow).
class DomainError : public std::runtime_error {
 public:
  DomainError(std::size_t offset, double t, const std::string& message)
      : std::runtime_error(message + " at t=" + std::to_string(t) + " (node offset " +
                           std::to_string(offset) + ")"),
        offset_(offset),
        t_(t) {}

  std::size_t offset() const noexcept { return offset_; }
  double t() const noexcept { return t_; }

 private:
  std::size_t offset_;
  double t_;
};

/// Symbolic differentiation hit a node without a derivative (abs).
class DifferentiationError : public std::runtime_error {
 public:
  DifferentiationError(std::size_t offset, const std::string& message)
      : std::runtime_error(message + " (node offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// A problem or configuration invariant does not hold. `t` is NaN when the
/// failure is not tied to a time instant.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string invariant, const std::string& message,
                  double t = std::nan(""))
      : std::runtime_error(message), invariant_(std::move(invariant)), t_(t) {}

  const std::string& invariant() const noexcept { return invariant_; }
  double t() const noexcept { return t_; }

 private:
  std::string invariant_;
  double t_;
};

/// Failures of the numerical kernels.
class NumericalError : public std::runtime_error {
 public:
  enum class Kind {
    Bracket,
    Degenerate,
    NonFinite,
    MaxDepth,
    DivZero,
    RMin,
    Blowup,
    Precondition,
  };

  NumericalError(Kind kind, const std::string& message)
      : std::runtime_error(std::string(kind_name(kind)) + ": " + message), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

  static const char* kind_name(Kind kind) noexcept {
    switch (kind) {
      case Kind::Bracket: return "BRACKET";
      case Kind::Degenerate: return "DEGENERATE";
      case Kind::NonFinite: return "NONFINITE";
      case Kind::MaxDepth: return "MAXDEPTH";
      case Kind::DivZero: return "DIVZERO";
      case Kind::RMin: return "RMIN";
      case Kind::Blowup: return "BLOWUP";
      case Kind::Precondition: return "PRECONDITION";
    }
    return "UNKNOWN";
  }

 private:
  Kind kind_;
};

}  // namespace ndde
