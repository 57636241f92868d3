// SPDX-License-Identifier: MIT
#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace mfgliq {

// Short %g rendering for messages.
inline std::string format_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// Base of everything the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A solver was asked for a coefficient class it cannot represent
// (e.g. closed form with time-varying coefficients).
class UnsupportedBackend : public Error {
public:
    using Error::Error;
};

class IntegrationFailure : public Error {
public:
    using Error::Error;
};

// An iterative procedure ran out of budget. `last_increment` is the
// last measured sup/L2 increment so callers can report how far off it was.
class NotConverged : public Error {
public:
    NotConverged(const std::string& what, double last_increment)
        : Error(what), last_increment_(last_increment) {}

    [[nodiscard]] double last_increment() const noexcept { return last_increment_; }

private:
    double last_increment_;
};

// A standing assumption required by an experiment does not hold.
class GateViolation : public Error {
public:
    using Error::Error;
};

}  // namespace mfgliq
