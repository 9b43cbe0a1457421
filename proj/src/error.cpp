#include "copcp/error.hpp"

namespace copcp {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::NonNumericCell: return "NonNumericCell";
        case ErrorCode::EmptyFile: return "EmptyFile";
        case ErrorCode::EmptyFitSet: return "EmptyFitSet";
        case ErrorCode::TooFewRows: return "TooFewRows";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::EmptySample: return "EmptySample";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::CalibTooSmall: return "CalibTooSmall";
        case ErrorCode::EmptyTestSet: return "EmptyTestSet";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace copcp
