#pragma once

#include <stdexcept>
#include <string>

namespace ecr {

// All library failures derive from Error so callers can catch one type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct LookupError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct LengthError : Error { using Error::Error; };
struct LayoutError : Error { using Error::Error; };
struct RegistrationError : Error { using Error::Error; };
struct ArgumentError : Error { using Error::Error; };
struct DataError : Error { using Error::Error; };
struct TrainingError : Error { using Error::Error; };
struct InputError : Error { using Error::Error; };

}  // namespace ecr
