#pragma once

#include <stdexcept>
#include <string>

namespace otune {

/// Base class for all tuner errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value lies outside its parameter's domain or a numeric precondition fails.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Mismatched dimensionality or assignment shape.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument (counts, sizes, ranges of scalar options).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Operation invoked on an object in the wrong state (unfitted model, empty repo).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Bad observed data (non-finite targets, irrecoverably singular systems).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Document does not match the expected schema.
class SchemaError : public Error {
 public:
  std::string field_path;
  SchemaError(const std::string& msg, std::string path = {})
      : Error(msg), field_path(std::move(path)) {}
};

/// Resource already exists with a conflicting definition.
class ConflictError : public Error {
 public:
  using Error::Error;
};

/// Referenced resource does not exist.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace otune
