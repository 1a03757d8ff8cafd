#ifndef POCKETGEN_ERROR_HPP_
#define POCKETGEN_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace pocketgen {

// Broad failure classes; the CLI maps these onto exit codes.
enum class ErrorClass { Config, Data, Numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what)
      : std::runtime_error(what), class_(cls) {}
  ErrorClass error_class() const noexcept { return class_; }

 private:
  ErrorClass class_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorClass::Config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorClass::Data, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorClass::Numeric, what) {}
};

}  // namespace pocketgen

#endif  // POCKETGEN_ERROR_HPP_
