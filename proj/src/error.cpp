#include "qgen/error.hpp"

namespace qgen {

std::string_view error_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::RaggedRows: return "RaggedRows";
        case ErrorCode::DuplicateColumnName: return "DuplicateColumnName";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::AllNull: return "AllNull";
        case ErrorCode::ZeroMean: return "ZeroMean";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::InsufficientRows: return "InsufficientRows";
        case ErrorCode::DegenerateTable: return "DegenerateTable";
        case ErrorCode::NoEligibleColumns: return "NoEligibleColumns";
        case ErrorCode::NoViableSlices: return "NoViableSlices";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::IncompatibleOperator: return "IncompatibleOperator";
        case ErrorCode::MissingMeasure: return "MissingMeasure";
        case ErrorCode::ArityMismatch: return "ArityMismatch";
        case ErrorCode::EmptySlice: return "EmptySlice";
        case ErrorCode::BadCatalog: return "BadCatalog";
        case ErrorCode::UnknownQuestion: return "UnknownQuestion";
        case ErrorCode::UnknownColumn: return "UnknownColumn";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::DatasetMismatch: return "DatasetMismatch";
        case ErrorCode::CorruptSnapshot: return "CorruptSnapshot";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace qgen
