#pragma once

#include <stdexcept>
#include <string>

namespace campsim {

// Bad configuration or parameters. The CLI maps this to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed input data (trace files, golden vectors, page images,
// corrupt compressed blocks). The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace campsim
