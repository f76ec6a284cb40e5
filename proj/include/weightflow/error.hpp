#pragma once

#include <stdexcept>
#include <string>

namespace weightflow {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

// Input is well formed but the requested quantity is undefined for it
// (e.g. Pearson correlation of a constant field).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class NotFound : public Error {
public:
    using Error::Error;
};

// Non-finite values, lost positivity, and other numerical breakdowns.
class NumericError : public Error {
public:
    using Error::Error;
};

class StagnationError : public NumericError {
public:
    using NumericError::NumericError;
};

// Explicit step would violate the CFL / positivity bound.
class StabilityError : public NumericError {
public:
    StabilityError(const std::string& what, double dt, double required_dt)
        : NumericError(what), dt_(dt), required_dt_(required_dt) {}

    double dt() const { return dt_; }
    double required_dt() const { return required_dt_; }

private:
    double dt_;
    double required_dt_;
};

}  // namespace weightflow
