#pragma once

#include <stdexcept>
#include <string>

namespace collatio {

// Caller supplied something that breaks a precondition. CLI exit 2, HTTP 422.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unknown edition, line, token, bundle or iteration. HTTP 404.
class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Single-writer contention. HTTP 409.
class ConflictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace collatio
