#include "calfoa/error.hpp"

namespace calfoa {

ParseError::ParseError(const std::string& what, std::size_t offset)
    : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

SolverError::SolverError(const std::string& what, double condition_estimate)
    : Error(what + " (condition estimate " + std::to_string(condition_estimate) + ")"),
      condition_(condition_estimate) {}

}  // namespace calfoa
