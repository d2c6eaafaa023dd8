#pragma once

#include <stdexcept>
#include <string>

namespace synthmean {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string &what) : std::runtime_error(what) {}
};

/// Input file does not conform to the expected schema (missing column,
/// invalid reference row, duplicate key).
class SchemaError : public Error {
  public:
    using Error::Error;
};

/// Mathematically invalid arguments (zero total weight, inverted plug-in
/// bounds, singular design, empty percentile input).
class DomainError : public Error {
  public:
    using Error::Error;
};

/// The reference table does not cover a stratum required by the cohort.
class CoverageError : public Error {
  public:
    using Error::Error;
};

/// A saturated model was fit or queried on an age with no observed outcomes.
class PositivityError : public Error {
  public:
    using Error::Error;
};

/// Too many bootstrap replicates failed (over the fatal threshold).
class ReplicateFailureError : public Error {
  public:
    using Error::Error;
};

} // namespace synthmean
