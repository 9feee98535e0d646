#include "wildfire/error.hpp"

namespace wildfire {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidRegion: return "invalid-region";
        case ErrorKind::InvalidPolygon: return "invalid-polygon";
        case ErrorKind::Index: return "index";
        case ErrorKind::Format: return "format";
        case ErrorKind::DuplicateKey: return "duplicate-key";
        case ErrorKind::Unresolved: return "unresolved";
        case ErrorKind::Contract: return "contract";
        case ErrorKind::NoCoverage: return "no-coverage";
        case ErrorKind::Assembly: return "assembly";
        case ErrorKind::Divergence: return "divergence";
        case ErrorKind::Io: return "io";
        case ErrorKind::Validation: return "validation";
    }
    return "unknown";
}

bool Error::is_validation() const noexcept {
    switch (kind_) {
        case ErrorKind::InvalidRegion:
        case ErrorKind::InvalidPolygon:
        case ErrorKind::Format:
        case ErrorKind::DuplicateKey:
        case ErrorKind::Unresolved:
        case ErrorKind::Validation:
        case ErrorKind::Assembly:
            return true;
        default:
            return false;
    }
}

}  // namespace wildfire
