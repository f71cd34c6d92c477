#pragma once

#include <stdexcept>
#include <string>

namespace bype {

// Error taxonomy shared by all modules. The CLI maps UsageError /
// DimensionError / FormatError / DomainError to exit code 1 and
// NumericError to exit code 2.

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Non-finite values are an error state, never a silent result.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace bype
