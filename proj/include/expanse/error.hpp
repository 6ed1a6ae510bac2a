#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace expanse {

// Base for everything the toolkit throws on bad input or failed invariants.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text: JSON lines, bracketed trees. `position` is a 1-based line
// number for line-oriented readers and a 0-based byte offset for tree text.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at " + std::to_string(position) + ")"), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A scoring backend failed or answered outside the wire protocol.
class OracleError : public Error {
 public:
  using Error::Error;
};

}  // namespace expanse
