#pragma once

#include <stdexcept>
#include <string>

namespace rwk {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A mandatory input file is missing or unreadable.
class IngestionError : public Error {
 public:
  using Error::Error;
};

// Input files disagree with each other (counts, ranges, ids).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Persisted artifact has a bad header or is truncated.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Persisted artifact was produced under a different configuration.
class StaleError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace rwk
