#pragma once

#include <stdexcept>
#include <string>

namespace tsim {

/// Input document or value violates a schema or precondition. The CLI maps
/// these to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class VersionError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

class BuildError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Unknown entity id passed to a query or control call.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class NoRouteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A metric is mathematically undefined for the given input.
class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace tsim
