#include "pestdet/error.hpp"

namespace pestdet {

const char* error_code_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::MaxvalUnsupported: return "MaxvalUnsupported";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::RectOutOfWindow: return "RectOutOfWindow";
    case ErrorCode::EmptyStage: return "EmptyStage";
    case ErrorCode::EmptyCascade: return "EmptyCascade";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::GraphCycle: return "GraphCycle";
    case ErrorCode::UnknownOp: return "UnknownOp";
    case ErrorCode::UnknownTensor: return "UnknownTensor";
    case ErrorCode::UnknownTier: return "UnknownTier";
    case ErrorCode::UnknownPlatform: return "UnknownPlatform";
    case ErrorCode::BudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::L1Overflow: return "L1Overflow";
    case ErrorCode::UnsortedTrace: return "UnsortedTrace";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::InsufficientData: return "InsufficientData";
    }
    return "Unknown";
}

} // namespace pestdet
