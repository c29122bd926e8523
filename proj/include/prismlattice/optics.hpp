#pragma once

#include "prismlattice/array2d.hpp"

#include <numbers>
#include <optional>
#include <vector>

namespace prismlattice {

inline constexpr int kMaxFacetCount = 12;

constexpr double deg_to_rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

/// n-fold multi-facet prism. Angles in radians.
struct PrismSpec {
    int facet_count = 3;
    double apex_angle = deg_to_rad(3.0);
    double refractive_index = 1.46;
    /// Optional per-facet deflection error (machining imperfection), radians.
    /// Empty means an ideal prism; otherwise one entry per facet.
    std::vector<double> facet_angle_error;

    void validate() const;
};

struct BeamSpec {
    double wavelength = 532e-9;
    double waist = 1.8e-3;   ///< 1/e^2 intensity radius
    double power = 0.0;
    double amplitude = 1.0;  ///< E0; intensities are in |E0|^2 units

    double wavenumber() const noexcept { return 2.0 * std::numbers::pi / wavelength; }
    void validate() const;
};

/// Everything field synthesis needs about the deflected beams.
///
/// Beam j leaves the facet centred on azimuth `facet_azimuths[j]` and is tilted
/// toward the optical axis, so its transverse wavevector points along
/// azimuth + pi. All wavevectors have magnitude `wavenumber`.
struct DeflectionGeometry {
    double deflection_angle = 0.0;
    double wavelength = 0.0;
    double wavenumber = 0.0;
    double transverse_wavenumber = 0.0;
    double amplitude = 1.0;
    double overlap_distance = 0.0;
    std::vector<double> facet_azimuths;
    std::vector<Vec3> wavevectors;

    int facet_count() const noexcept { return static_cast<int>(facet_azimuths.size()); }
};

/// Thin-prism deflection (mu - 1) * alpha.
double deflection_angle(const PrismSpec& prism);

/// Distance from the prism vertex at which the deflected sectors overlap
/// maximally: w0 / tan(theta).
double overlap_distance(const BeamSpec& beam, double theta);

DeflectionGeometry beam_wavevectors(const PrismSpec& prism, const BeamSpec& beam);

/// Builds the geometry for an explicit deflection angle, bypassing the prism.
/// theta == 0 is accepted (undeflected beam) and yields an infinite overlap
/// distance.
DeflectionGeometry make_geometry(int facet_count, double theta, const BeamSpec& beam,
                                 const std::vector<double>& facet_angle_error = {});

/// Closed-form nearest-site spacing, only for n = 3 (triangular) and n = 4
/// (square). std::nullopt means no closed form; fall back to a peak search.
std::optional<double> predicted_lattice_constant(const DeflectionGeometry& geometry);

} // namespace prismlattice
