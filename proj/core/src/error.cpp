#include "textrepair/error.hpp"

namespace textrepair {

// Out-of-line key functions so each exception type has one home TU.
Error::~Error() = default;
ConfigError::~ConfigError() = default;
IoError::~IoError() = default;
TransportError::~TransportError() = default;
ProtocolError::~ProtocolError() = default;

}  // namespace textrepair
