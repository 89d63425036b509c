#pragma once

#include <stdexcept>
#include <string>

namespace nvcoh {

/// Argument outside the physical domain of an operation (negative rate, T <= 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed configuration or input data.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A fit could not be started or produced an unusable result.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_domain(bool ok, const std::string& what)
{
    if (!ok) {
        throw DomainError(what);
    }
}

}  // namespace detail
}  // namespace nvcoh
