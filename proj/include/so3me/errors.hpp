#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace so3me {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A matrix handed to the rotation-group code is not close enough to SO(3).
class NotNearGroup : public Error {
 public:
  using Error::Error;
};

/// A raw matrix passed to vex() is not skew-symmetric.
class NotSkew : public Error {
 public:
  using Error::Error;
};

/// Two direction measurements are (nearly) parallel, so no frame can be
/// completed with their cross product.
class DegeneratePair : public Error {
 public:
  using Error::Error;
};

/// The inertial direction matrix does not span R^3.
class RankDeficient : public Error {
 public:
  using Error::Error;
};

/// Target eigenvalues (or K's eigenvalues) are not pairwise distinct.
class NonDistinct : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& field,
             const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " +
              (field.empty() ? std::string() : "'" + field + "': ") + what),
        line_(line),
        field_(field) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace so3me
