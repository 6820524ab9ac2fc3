#pragma once

#include <stdexcept>
#include <string>

namespace bms {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// numeric domain violations (gamma at x <= 0, negative gain argument, ...)
struct DomainError : Error {
    using Error::Error;
};

// Mittag-Leffler series argument beyond the cancellation guard
struct ArgumentTooLarge : Error {
    using Error::Error;
};

// plant capacitance law evaluated <= 0 at the requested state of charge
struct NonPositiveCapacitance : Error {
    using Error::Error;
};

// observer-side capacitance estimate went <= 0 mid-run; the run is aborted
// rather than clamped so a bad bounds choice cannot silently corrupt results
struct NonPositiveEstimatedCapacitance : Error {
    using Error::Error;
};

// malformed load profile (non-positive resistance, empty current table)
struct ProfileDomain : Error {
    using Error::Error;
};

// voltage outside the invertible OCV bracket
struct OutOfRange : Error {
    using Error::Error;
};

// OCV curve fails the strict-monotonicity check needed for inversion
struct NonMonotonic : Error {
    using Error::Error;
};

struct EmptySeries : Error {
    using Error::Error;
};

// closure values requested before the estimator has converged
struct NotConverged : Error {
    using Error::Error;
};

// estimator configuration failed a construction invariant
struct ConfigRejected : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct NonMonotonicTime : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace bms
