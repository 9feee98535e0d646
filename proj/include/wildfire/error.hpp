#pragma once

#include <stdexcept>
#include <string>

namespace wildfire {

enum class ErrorKind {
    InvalidRegion,
    InvalidPolygon,
    Index,
    Format,
    DuplicateKey,
    Unresolved,
    Contract,
    NoCoverage,
    Assembly,
    Divergence,
    Io,
    Validation,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (the CLI,
// the HTTP service) can map it to an exit code or status without parsing text.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    // Input problems the user can fix (bad files, bad parameters) as opposed
    // to failures while computing.
    bool is_validation() const noexcept;

private:
    ErrorKind kind_;
};

}  // namespace wildfire
