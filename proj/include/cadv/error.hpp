#pragma once

#include <stdexcept>
#include <string>

namespace cadv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input that makes an operation undefined, e.g. a zero-norm vector.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Out-of-range ids, labels, malformed records.
class InputError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// API misuse, e.g. calling backward on a non-scalar.
class ContractError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

}  // namespace cadv
