#pragma once

#include <stdexcept>
#include <string>

namespace deepmatch {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or parameter shape does not match the declared contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file (dataset, embeddings, config).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Invalid model or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, corrupted, or incompatible checkpoint.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace deepmatch
