#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace spectra {

// argument outside the stated domain of a function
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// evaluation inside the guard band around a pole of some Q entry
class PoleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// a denominator that is not a pole of the model but still vanishes
class SingularError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Denominators smaller than this are treated as exact zeros.
inline constexpr double guard_threshold = 1e-12;

inline void guard(double denom, const char* what)
{
    if (!(std::abs(denom) >= guard_threshold))
        throw PoleError(std::string("pole: ") + what);
}

} // namespace spectra
