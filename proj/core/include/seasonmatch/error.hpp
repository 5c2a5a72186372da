#pragma once

#include <stdexcept>
#include <string>

namespace seasonmatch {

// Error taxonomy maps onto the CLI exit codes: UsageError -> 1,
// DataError -> 2, NumericalError -> 3.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct UsageError : Error {
  explicit UsageError(const std::string& msg) : Error(msg) {}
};

struct DataError : Error {
  explicit DataError(const std::string& msg) : Error(msg) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

}  // namespace seasonmatch
