#pragma once

#include <stdexcept>
#include <string>

namespace folia {

// Thrown when an operation receives input that violates its contract
// (dimension mismatch, broken type invariant, malformed parameter).
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// Thrown when a history enumeration would exceed the configured branch cap.
class CapExceeded : public std::runtime_error {
public:
    explicit CapExceeded(const std::string& what) : std::runtime_error(what) {}
};

} // namespace folia
