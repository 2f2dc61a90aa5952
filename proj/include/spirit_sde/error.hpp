#pragma once

#include <stdexcept>
#include <string>

namespace ssd {

// Exit codes of the CLI map onto these categories.
struct Error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct InvalidInput : Error
{
  using Error::Error;
};

struct NumericalError : Error
{
  using Error::Error;
};

struct ConfigError : Error
{
  using Error::Error;
};

struct IoError : Error
{
  using Error::Error;
};

} // namespace ssd
