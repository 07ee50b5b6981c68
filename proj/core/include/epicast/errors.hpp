#pragma once

#include <stdexcept>
#include <string>

namespace epicast {

// Base of every error the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller violated a documented precondition (bad lengths, wrong series kind, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Input file does not follow the expected layout.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A data cell could not be interpreted. Carries 1-based row and 0-based column.
class DataError : public Error {
public:
    DataError(const std::string &what, std::size_t row, std::size_t column)
        : Error(what), row_(row), column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

class LookupError : public Error {
public:
    using Error::Error;
};

/// Singular systems, non-finite losses, and similar numerical breakdowns.
class NumericalError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace epicast
