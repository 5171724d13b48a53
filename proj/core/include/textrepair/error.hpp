#pragma once

#include <stdexcept>
#include <string>

namespace textrepair {

// Root of the library's exception hierarchy.  Callers that want a single
// catch-all can catch Error; the CLI maps the subtypes to exit codes.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  ~Error() override;
};

// Invalid parameters, malformed configuration, inconsistent model setups.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(what) {}
  ~ConfigError() override;
};

// Local file problems: missing paths, malformed data files, write failures.
class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error(what) {}
  ~IoError() override;
};

// A remote service could not be reached (after retries).
class TransportError : public Error {
public:
  explicit TransportError(const std::string& what) : Error(what) {}
  ~TransportError() override;
};

// A remote service answered, but with a payload that violates the wire
// contract (bad JSON, wrong shape, probabilities that do not sum to one).
class ProtocolError : public TransportError {
public:
  explicit ProtocolError(const std::string& what) : TransportError(what) {}
  ~ProtocolError() override;
};

}  // namespace textrepair
