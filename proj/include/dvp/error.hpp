#pragma once

#include <stdexcept>
#include <string>

namespace dvp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unsupported input data (Y4M headers, DVPW files, CSV, JSON).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Tensor, plane or frame geometry does not match what an operation needs.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Caller passed an argument outside the operation's domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An external encoder, decoder or tool failed.
class CodecError : public Error {
 public:
  using Error::Error;
};

[[noreturn]] void throw_format(const std::string& what);
[[noreturn]] void throw_shape(const std::string& what);
[[noreturn]] void throw_invalid(const std::string& what);

}  // namespace dvp
