#pragma once

#include <stdexcept>
#include <string>

namespace perfml {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Schema-level problems: malformed schema files, missing required columns.
/// The CLI maps these to exit code 2.
class SchemaError : public Error {
public:
  using Error::Error;
};

/// Invalid arguments or option combinations.
class UsageError : public Error {
public:
  using Error::Error;
};

} // namespace perfml
