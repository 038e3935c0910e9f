#pragma once

#include <stdexcept>
#include <string>

namespace boxfuse {

enum class ErrorKind {
    MalformedFile,
    EmptyCloud,
    NonFiniteCoordinate,
    MissingCameraFile,
    DimensionMismatch,
    NonInvertibleExtrinsic,
    MalformedLine,
    UnknownFrame,
    IndexOutOfRange,
    HeaderMismatch,
    IoFailure,
    EmptyLift,
    InfeasiblePlacement,
    InvalidConfig,
};

const char* to_string(ErrorKind kind);

// Data errors carry a kind so callers (and the CLI exit code) can tell them apart.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace boxfuse
