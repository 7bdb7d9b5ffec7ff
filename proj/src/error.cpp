#include "d2d/error.hpp"

namespace d2d {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::CycleLimitExceeded: return "CYCLE_LIMIT_EXCEEDED";
    case ErrorCode::NotAuxLoop: return "NOT_AUX_LOOP";
    case ErrorCode::AuxCycle: return "AUX_CYCLE";
    case ErrorCode::UnknownTarget: return "UNKNOWN_TARGET";
    case ErrorCode::ParameterMismatch: return "PARAMETER_MISMATCH";
    case ErrorCode::PolarityViolation: return "POLARITY_VIOLATION";
    case ErrorCode::NotRunnable: return "NOT_RUNNABLE";
    case ErrorCode::MissingSheet: return "MISSING_SHEET";
    case ErrorCode::MissingColumn: return "MISSING_COLUMN";
    case ErrorCode::BadTypeCell: return "BAD_TYPE_CELL";
    case ErrorCode::BadTagCell: return "BAD_TAG_CELL";
    case ErrorCode::EmptyLabel: return "EMPTY_LABEL";
    case ErrorCode::SchemaViolation: return "SCHEMA_VIOLATION";
    case ErrorCode::MalformedWorkbook: return "MALFORMED_WORKBOOK";
    case ErrorCode::Io: return "IO_ERROR";
    case ErrorCode::NonFiniteInput: return "NON_FINITE_INPUT";
    case ErrorCode::NonFiniteState: return "NON_FINITE_STATE";
    case ErrorCode::InsufficientSamples: return "INSUFFICIENT_SAMPLES";
    case ErrorCode::InvalidSettings: return "INVALID_SETTINGS";
    }
    return "UNKNOWN";
}

} // namespace d2d
