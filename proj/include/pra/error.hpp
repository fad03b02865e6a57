#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pra {

/// Base class for all errors raised by this library.
class error : public std::runtime_error {
public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Violated precondition or out-of-domain argument.
class domain_error : public error {
public:
  explicit domain_error(const std::string& what) : error(what) {}
};

/// Not enough data to produce a meaningful answer (empty scan, no ground
/// returns, empty evaluation set).
class insufficient_data_error : public error {
public:
  explicit insufficient_data_error(const std::string& what) : error(what) {}
};

/// Malformed serialized input. Carries the byte offset or line number at
/// which parsing failed; which one applies depends on the format and is
/// stated in the message.
class format_error : public error {
public:
  format_error(const std::string& what, std::size_t position)
      : error(what + " (at position " + std::to_string(position) + ")"),
        position_(position) {}

  explicit format_error(const std::string& what)
      : error(what), position_(0) {}

  std::size_t position() const { return position_; }

private:
  std::size_t position_;
};

}  // namespace pra
