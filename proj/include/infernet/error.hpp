#pragma once

#include <stdexcept>
#include <string>

namespace infernet {

// Base of every error raised by the library. The CLI maps DataError and
// IoError to exit code 2 and everything else to 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Invalid content in otherwise well-formed input (manifests, fixations).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace infernet
