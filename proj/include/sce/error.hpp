#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sce {

enum class ErrorKind {
    InvalidArgument,
    InsufficientData,
    DegenerateColumn,
    EmptyScreen,
    InfeasibleDependence,
    NotApplicable,
    Parse,
    Data,
    InternalConsistency,
    DegenerateResponse,
    Io,
};

std::string_view to_string(ErrorKind kind);

/// Every failure in the library is reported through this type. The kind is
/// machine readable so the CLI can emit it into its error JSON.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Cell-level problems in an input file keep their location.
class LocatedError : public Error {
public:
    LocatedError(ErrorKind kind, const std::string& what, std::size_t row, std::string column)
        : Error(kind, what), row_(row), column_(std::move(column)) {}

    std::size_t row() const noexcept { return row_; }
    const std::string& column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::string column_;
};

}  // namespace sce
