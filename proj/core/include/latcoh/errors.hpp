#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace latcoh {

/// Base class for all latcoh errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A feedback kernel violates one of the admissibility assumptions.
class AssumptionViolation : public Error {
 public:
  enum class Which {
    Locality,
    ReflectionSymmetry,
    CoordinateDecoupling,
    RelativeZeroSum,
    AbsoluteNegativeSum,
  };

  AssumptionViolation(Which which, const std::string& detail)
      : Error("assumption violation (" + name(which) + "): " + detail), which_(which) {}

  Which which() const { return which_; }

  static std::string name(Which w) {
    switch (w) {
      case Which::Locality: return "Locality";
      case Which::ReflectionSymmetry: return "ReflectionSymmetry";
      case Which::CoordinateDecoupling: return "CoordinateDecoupling";
      case Which::RelativeZeroSum: return "RelativeZeroSum";
      case Which::AbsoluteNegativeSum: return "AbsoluteNegativeSum";
    }
    return "?";
  }

 private:
  Which which_;
};

class WindowTooLarge : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class DegenerateArray : public Error {
 public:
  using Error::Error;
};

class InvalidVariant : public Error {
 public:
  using Error::Error;
};

/// phi() denominator vanished: degenerate parameter combination.
class SingularPhi : public Error {
 public:
  using Error::Error;
};

/// A per-frequency block (or the deflated full matrix) is not Hurwitz.
class UnstableBlock : public Error {
 public:
  UnstableBlock(const std::string& msg, std::vector<double> theta = {})
      : Error(msg), theta_(std::move(theta)) {}
  const std::vector<double>& theta() const { return theta_; }

 private:
  std::vector<double> theta_;
};

/// Measurement-noise density is infinite where the averaging symbol vanishes.
class ZeroAveraging : public Error {
 public:
  ZeroAveraging(const std::string& msg, std::vector<double> theta = {})
      : Error(msg), theta_(std::move(theta)) {}
  const std::vector<double>& theta() const { return theta_; }

 private:
  std::vector<double> theta_;
};

class SingularLyapunov : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& msg)
      : Error("parse error at line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class NegativeWeight : public Error {
 public:
  using Error::Error;
};

/// Explicit integration step fails the spectral stability bound.
class UnstableStep : public Error {
 public:
  UnstableStep(const std::string& msg, double suggested_dt)
      : Error(msg), suggested_dt_(suggested_dt) {}
  double suggested_dt() const { return suggested_dt_; }

 private:
  double suggested_dt_;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

}  // namespace latcoh
