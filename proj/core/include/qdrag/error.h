#pragma once

#include <stdexcept>
#include <string>

namespace qdrag {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user configuration: flags, config files, chunk policies, prompt templates.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// A model provider failed after exhausting its retries, or violated its contract.
class ProviderError : public Error {
 public:
  using Error::Error;
};

}  // namespace qdrag
