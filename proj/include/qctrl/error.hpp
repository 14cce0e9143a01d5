#pragma once

#include <stdexcept>
#include <string>

namespace qctrl {

// Base error for all qctrl domain failures. RPC handlers map these onto
// error envelopes; everything else lets them propagate.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Expression-text syntax error. column is 1-based.
class ParseError : public Error {
public:
    ParseError(int column, const std::string& msg)
        : Error(msg + " (column " + std::to_string(column) + ")"), column_(column) {}

    int column() const { return column_; }

private:
    int column_;
};

// Parameter/schema errors carry the offending field name.
class FieldError : public Error {
public:
    FieldError(std::string field, const std::string& msg)
        : Error(msg), field_(std::move(field)) {}

    const std::string& field() const { return field_; }

private:
    std::string field_;
};

}  // namespace qctrl
