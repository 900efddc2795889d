#pragma once

#include <stdexcept>
#include <string>

namespace irsr {

// Base for every error the library raises. The CLI maps ValidationError to
// exit code 1 and IoError/EngineError to exit code 2.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad arguments, shape mismatches, contract violations.
class ValidationError : public Error {
public:
  using Error::Error;
};

// Unreadable or unwritable files, unsupported file layouts.
class IoError : public Error {
public:
  using Error::Error;
};

// External SR engine failures (exit status, timeout, bad outputs).
class EngineError : public Error {
public:
  using Error::Error;
};

}  // namespace irsr
