#pragma once

#include <stdexcept>
#include <string>

namespace pushblock {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidRates : Error { using Error::Error; };
struct InvalidParameters : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct TruncationError : Error { using Error::Error; };
struct ExplosionError : Error { using Error::Error; };
struct SpanExceeded : Error { using Error::Error; };
struct PrecisionError : Error { using Error::Error; };
struct UnsupportedError : Error { using Error::Error; };
struct SingularityError : Error { using Error::Error; };
struct ContourError : Error { using Error::Error; };
struct OracleTooLarge : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace pushblock
