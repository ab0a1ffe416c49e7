#pragma once

#include <stdexcept>
#include <string>

namespace tunesmith {

// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed tokenizer / config / calibration / manifest input.
class LoadError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures; carries the offending path in the message.
class IoError : public Error {
 public:
  using Error::Error;
};

// A record violates a documented invariant (label layout, array lengths, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A prompt + response pair does not fit in the sequence length.
class OverflowError : public Error {
 public:
  using Error::Error;
};

// Calibration lookup failed.
class CalibrationError : public Error {
 public:
  using Error::Error;
};

// Non-2xx chat completion after retries.
class RequestError : public Error {
 public:
  RequestError(int status, std::string body_excerpt)
      : Error("request failed with status " + std::to_string(status) + ": " + body_excerpt),
        status_(status),
        body_(std::move(body_excerpt)) {}

  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

// Well-formed HTTP exchange whose payload is not a usable completion.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace tunesmith
