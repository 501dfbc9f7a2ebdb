#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qgen {

enum class ErrorCode {
    // ingest
    EmptyInput,
    RaggedRows,
    DuplicateColumnName,
    IoFailure,
    // measures
    AllNull,
    ZeroMean,
    ZeroVariance,
    InsufficientRows,
    DegenerateTable,
    NoEligibleColumns,
    // slicing
    NoViableSlices,
    InsufficientData,
    // question generation
    IncompatibleOperator,
    MissingMeasure,
    ArityMismatch,
    EmptySlice,
    BadCatalog,
    // ranking / session
    UnknownQuestion,
    UnknownColumn,
    VersionMismatch,
    DatasetMismatch,
    CorruptSnapshot,
    InvalidArgument,
};

std::string_view error_name(ErrorCode code) noexcept;

// Every engine failure is reported through this type; the code's name is
// what the service puts in error bodies.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    std::string_view name() const noexcept { return error_name(code_); }

private:
    ErrorCode code_;
};

}  // namespace qgen
