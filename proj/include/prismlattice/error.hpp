#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prismlattice {

enum class ErrorKind {
    InvalidSpec,
    DegenerateGeometry,
    DimensionMismatch,
    Resolution,
    OutOfBounds,
    NoPeaks,
    NonConvergence,
    IllConditioned,
    InsufficientData,
    NoRing,
    RegionNotFound,
    ZeroDetuning,
    Config,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// All library failures are reported through this type; `kind()` lets callers
// branch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::InvalidSpec: return "invalid-spec";
    case ErrorKind::DegenerateGeometry: return "degenerate-geometry";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::OutOfBounds: return "out-of-bounds";
    case ErrorKind::NoPeaks: return "no-peaks";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::IllConditioned: return "ill-conditioned";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::NoRing: return "no-ring";
    case ErrorKind::RegionNotFound: return "region-not-found";
    case ErrorKind::ZeroDetuning: return "zero-detuning";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
    }
    return "unknown";
}

} // namespace prismlattice
