#pragma once

#include <stdexcept>
#include <string>

namespace emgsens {

// Exit codes used by the CLI: 0 ok, 2 config error, 3 data error,
// 4 numeric failure.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
  static constexpr int exit_code = 2;
};

struct DataError : Error {
  using Error::Error;
  static constexpr int exit_code = 3;
};

struct NumericError : Error {
  using Error::Error;
  static constexpr int exit_code = 4;
};

}  // namespace emgsens
