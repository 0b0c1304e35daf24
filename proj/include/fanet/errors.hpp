#pragma once

#include <stdexcept>
#include <string>

namespace fanet {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Two points coincide, so a bearing between them is undefined.
class CoincidentPointsError : public Error {
public:
  CoincidentPointsError() : Error("coincident points: bearing is undefined") {}
};

class NotPositiveSemiDefinite : public Error {
public:
  using Error::Error;
};

/// No route exists between the requested endpoints.
class DisconnectedError : public Error {
public:
  DisconnectedError(std::size_t source, std::size_t dest)
      : Error("no path between " + std::to_string(source) + " and " +
              std::to_string(dest)) {}
};

/// Configuration problem; `key` is the dotted path of the offending entry.
class ConfigError : public Error {
public:
  ConfigError(std::string key, const std::string &what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

  [[nodiscard]] const std::string &key() const noexcept { return key_; }

private:
  std::string key_;
};

} // namespace fanet
