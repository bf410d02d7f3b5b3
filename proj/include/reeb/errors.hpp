#pragma once

#include <stdexcept>
#include <string>

namespace reeb {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Point off its manifold, wrong coordinate count, unsupported model.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed expression, manifold string, or form string.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// λ ∧ (dλ)^n vanishes (numerically) or a contact linear system has no
/// consistent solution.
class DegenerateFormError : public Error {
 public:
  DegenerateFormError(const std::string& what, double value)
      : Error(what), value_(value) {}
  /// Offending singular value or residual.
  double value() const { return value_; }

 private:
  double value_;
};

class FlowError : public Error {
 public:
  using Error::Error;
};

/// A map failed the pullback test for being a (coorientation preserving)
/// contactomorphism.
class NotContactError : public Error {
 public:
  enum class Reason { coorientation_reversed, not_conformal };
  NotContactError(const std::string& what, Reason reason, double value)
      : Error(what), reason_(reason), value_(value) {}
  Reason reason() const { return reason_; }
  double value() const { return value_; }

 private:
  Reason reason_;
  double value_;
};

/// Two computations that must agree did not.
class GateError : public Error {
 public:
  GateError(const std::string& what, double value) : Error(what), value_(value) {}
  double value() const { return value_; }

 private:
  double value_;
};

class BasisError : public Error {
 public:
  using Error::Error;
};

}  // namespace reeb
