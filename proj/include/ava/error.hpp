#pragma once

#include <stdexcept>
#include <string>

namespace ava {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input (manifest CSV, float grids). Message carries the line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The classifier under attack failed or returned unusable values.
class OracleError : public Error {
 public:
  using Error::Error;
};

class ConnectionError : public OracleError {
 public:
  using OracleError::OracleError;
};

class ProtocolError : public OracleError {
 public:
  using OracleError::OracleError;
};

}  // namespace ava
