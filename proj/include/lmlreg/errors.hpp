#pragma once

#include <stdexcept>
#include <string>

namespace lmlreg {

// Every failure the library raises derives from Error so callers can map
// categories onto exit codes without string matching.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

// A parameter value that maps to a probability table with a non-positive
// cell. Carries the offending cell so optimizers can back off.
class BoundaryError : public Error {
public:
    BoundaryError(const std::string& what, unsigned row_mask, unsigned col_mask, double value)
        : Error(what), row_mask_(row_mask), col_mask_(col_mask), value_(value) {}

    unsigned row_mask() const noexcept { return row_mask_; }
    unsigned col_mask() const noexcept { return col_mask_; }
    double value() const noexcept { return value_; }

private:
    unsigned row_mask_;
    unsigned col_mask_;
    double value_;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

} // namespace lmlreg
