#include "sce/error.hpp"

namespace sce {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid_argument";
        case ErrorKind::InsufficientData: return "insufficient_data";
        case ErrorKind::DegenerateColumn: return "degenerate_column";
        case ErrorKind::EmptyScreen: return "empty_screen";
        case ErrorKind::InfeasibleDependence: return "infeasible_dependence";
        case ErrorKind::NotApplicable: return "not_applicable";
        case ErrorKind::Parse: return "parse_error";
        case ErrorKind::Data: return "data_error";
        case ErrorKind::InternalConsistency: return "internal_consistency";
        case ErrorKind::DegenerateResponse: return "degenerate_response";
        case ErrorKind::Io: return "io_error";
    }
    return "unknown";
}

}  // namespace sce
