#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gazeprompt {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Malformed recording, journal or config input. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class IoError : public Error {
public:
  using Error::Error;
};

class InsufficientData : public Error {
public:
  InsufficientData() : Error("insufficient data") {}
  explicit InsufficientData(const std::string& detail) : Error("insufficient data: " + detail) {}
};

class BaselineUnavailable : public Error {
public:
  BaselineUnavailable() : Error("baseline unavailable") {}
};

class ReplayAborted : public Error {
public:
  explicit ReplayAborted(std::size_t position)
      : Error("replay aborted: sink rejected sample " + std::to_string(position)), position_(position) {}

  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

class PhaseError : public Error {
public:
  using Error::Error;
};

class TransportError : public Error {
public:
  TransportError(const std::string& what, int attempts) : Error(what), attempts_(attempts) {}

  int attempts() const noexcept { return attempts_; }

private:
  int attempts_;
};

class AuthError : public Error {
public:
  using Error::Error;
};

}  // namespace gazeprompt
