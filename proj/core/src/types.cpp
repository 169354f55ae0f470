#include "crowdal/types.hpp"

namespace crowdal {

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

Label label_from_int(int value) {
  if (value == 1) return Label::Positive;
  if (value == -1) return Label::Negative;
  throw DomainError("label must be -1 or +1, got " + std::to_string(value));
}

}  // namespace crowdal
