#pragma once

#include <stdexcept>
#include <string>

namespace doseopt {

// Bad user-facing input: infeasible correlation, margins out of range, etc.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Caller broke an API precondition (mismatched lattices, missing sigma_u).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// A configured cap on memory, sample size or simulation volume was hit.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace doseopt
