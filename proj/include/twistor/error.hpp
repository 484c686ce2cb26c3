#pragma once

#include <stdexcept>
#include <string>

namespace twistor {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvariantError : Error { using Error::Error; };
struct PoleError : Error { using Error::Error; };
struct IndexError : Error { using Error::Error; };
struct IntegrationError : Error { using Error::Error; };
struct QuadratureOrderError : Error { using Error::Error; };
struct FitError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

} // namespace twistor
