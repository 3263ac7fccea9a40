#pragma once

#include <stdexcept>
#include <string>

namespace wormnet {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidLabelError : public Error { using Error::Error; };
class MalformedStatusError : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class PreconditionError : public Error { using Error::Error; };
class SizeError : public Error { using Error::Error; };
class StructureError : public Error { using Error::Error; };
class ConfigurationError : public Error { using Error::Error; };
class ModeError : public Error { using Error::Error; };
class ParseError : public Error { using Error::Error; };

class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::size_t layer)
      : Error(what + " (layer " + std::to_string(layer) + ")"), layer_(layer) {}
  std::size_t layer() const noexcept { return layer_; }

 private:
  std::size_t layer_;
};

}  // namespace wormnet
