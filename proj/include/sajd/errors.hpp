#pragma once

#include <stdexcept>
#include <string>

namespace sajd {

// Base class for every error this library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A field of a domain record is outside its allowed range. Carries the
// name of the first violated field in declaration order.
class RangeError : public Error {
 public:
  explicit RangeError(std::string field)
      : Error("value out of range: " + field), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  EmptyInput() : Error("empty input series") {}
};

// Batch with (near-)zero variance; cannot be standard-scaled or clustered.
class DegenerateBatch : public Error {
 public:
  DegenerateBatch() : Error("degenerate batch: variance below floor") {}
};

class TooShort : public Error {
 public:
  explicit TooShort(const std::string& what) : Error(what) {}
};

class DegenerateData : public Error {
 public:
  using Error::Error;
};

class SingleClassData : public Error {
 public:
  SingleClassData() : Error("training data contains a single class") {}
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

class OutOfOrder : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class UnknownSeries : public Error {
 public:
  explicit UnknownSeries(const std::string& series)
      : Error("unknown series: " + series) {}
};

class NotEnoughData : public Error {
 public:
  using Error::Error;
};

class NotifyTimeout : public Error {
 public:
  using Error::Error;
};

class FetchError : public Error {
 public:
  using Error::Error;
};

class BindError : public Error {
 public:
  using Error::Error;
};

class ComponentStartupError : public Error {
 public:
  using Error::Error;
};

}  // namespace sajd
