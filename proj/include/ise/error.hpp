#pragma once

#include <stdexcept>
#include <string>

namespace ise {

/// Bad or inconsistent input data (malformed records, missing embeddings,
/// missing upstream artifacts). The CLI maps this to exit code 1.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ise
