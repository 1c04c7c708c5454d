#pragma once

#include <stdexcept>
#include <string>

namespace pestdet {

// Every failure raised by the library carries one of these codes. The C API
// maps them one-to-one onto pd_status values.
enum class ErrorCode {
    InvalidArgument = 1,
    Io,
    MalformedHeader,
    MaxvalUnsupported,
    TruncatedData,
    OutOfBounds,
    Overflow,
    SchemaViolation,
    MissingField,
    RectOutOfWindow,
    EmptyStage,
    EmptyCascade,
    ShapeMismatch,
    GraphCycle,
    UnknownOp,
    UnknownTensor,
    UnknownTier,
    UnknownPlatform,
    BudgetTooSmall,
    L1Overflow,
    UnsortedTrace,
    ImageTooSmall,
    InsufficientData,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

} // namespace pestdet
