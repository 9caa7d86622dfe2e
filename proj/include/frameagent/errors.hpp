// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace frameagent {

/// Base for every error the engine raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Asset bundle could not be read or failed validation.
class AssetError : public Error {
 public:
  using Error::Error;
};

enum class ParseErrorKind {
  NoLiteral,    // nothing parsable carrying the expected key
  BadValue,     // key present but value is not coercible
  OutOfRange,   // value parsed but outside the allowed set
};

class ParseError : public Error {
 public:
  ParseError(ParseErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  ParseErrorKind kind() const noexcept { return kind_; }

 private:
  ParseErrorKind kind_;
};

/// Model, embedding or caption backend failure.
class BackendError : public Error {
 public:
  using Error::Error;
};

/// Retryable transport failure (connection error, HTTP 429/5xx).
class TransientError : public BackendError {
 public:
  using BackendError::BackendError;
};

class AuthenticationError : public BackendError {
 public:
  using BackendError::BackendError;
};

class RetriesExhaustedError : public BackendError {
 public:
  RetriesExhaustedError(const std::string& what, int attempts)
      : BackendError(what), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

/// Scripted backend has no response for the requested (kind, round).
class ScriptMissingError : public BackendError {
 public:
  using BackendError::BackendError;
};

}  // namespace frameagent
