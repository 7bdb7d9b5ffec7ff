#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace d2d {

enum class ErrorCode {
    // structure
    CycleLimitExceeded,
    NotAuxLoop,
    AuxCycle,
    UnknownTarget,
    ParameterMismatch,
    PolarityViolation,
    NotRunnable,
    // ingest
    MissingSheet,
    MissingColumn,
    BadTypeCell,
    BadTagCell,
    EmptyLabel,
    SchemaViolation,
    MalformedWorkbook,
    Io,
    // numerics
    NonFiniteInput,
    NonFiniteState,
    // statistics
    InsufficientSamples,
    // settings
    InvalidSettings,
};

std::string_view to_string(ErrorCode code);

/// Failure of an operation. The code is machine-readable; `location` names the
/// offending row, JSON path, or element when one exists.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &message, std::string location = {})
        : std::runtime_error(message), code_(code), location_(std::move(location)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string &location() const noexcept { return location_; }

  private:
    ErrorCode code_;
    std::string location_;
};

} // namespace d2d
