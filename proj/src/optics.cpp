#include "prismlattice/optics.hpp"

#include "prismlattice/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace prismlattice {

void PrismSpec::validate() const
{
    if (facet_count < 2 || facet_count > kMaxFacetCount)
        throw Error(ErrorKind::InvalidSpec, "facet_count must be in [2, " + std::to_string(kMaxFacetCount) +
                                                "], got " + std::to_string(facet_count));
    if (!(apex_angle > 0.0 && apex_angle < std::numbers::pi / 2))
        throw Error(ErrorKind::InvalidSpec, "apex_angle must be in (0, pi/2) rad");
    if (!(refractive_index > 1.0))
        throw Error(ErrorKind::InvalidSpec, "refractive_index must exceed 1");
    if (!facet_angle_error.empty() && static_cast<int>(facet_angle_error.size()) != facet_count)
        throw Error(ErrorKind::InvalidSpec, "facet_angle_error needs one entry per facet");
}

void BeamSpec::validate() const
{
    if (!(wavelength > 0.0))
        throw Error(ErrorKind::InvalidSpec, "wavelength must be positive");
    if (!(waist > 0.0))
        throw Error(ErrorKind::InvalidSpec, "waist must be positive");
    if (!(power >= 0.0))
        throw Error(ErrorKind::InvalidSpec, "power must be non-negative");
    if (!std::isfinite(amplitude))
        throw Error(ErrorKind::InvalidSpec, "amplitude must be finite");
}

double deflection_angle(const PrismSpec& prism)
{
    prism.validate();
    return (prism.refractive_index - 1.0) * prism.apex_angle;
}

double overlap_distance(const BeamSpec& beam, double theta)
{
    if (!(theta > 0.0))
        throw Error(ErrorKind::DegenerateGeometry, "deflection angle must be positive for the sectors to overlap");
    if (!(theta < std::numbers::pi / 2))
        throw Error(ErrorKind::DegenerateGeometry, "deflection angle must be below pi/2");
    return beam.waist / std::tan(theta);
}

DeflectionGeometry make_geometry(int facet_count, double theta, const BeamSpec& beam,
                                 const std::vector<double>& facet_angle_error)
{
    beam.validate();
    if (facet_count < 2 || facet_count > kMaxFacetCount)
        throw Error(ErrorKind::InvalidSpec, "facet_count must be in [2, " + std::to_string(kMaxFacetCount) + "]");
    if (!(theta >= 0.0 && theta < std::numbers::pi / 2))
        throw Error(ErrorKind::InvalidSpec, "deflection angle must be in [0, pi/2)");
    if (!facet_angle_error.empty() && static_cast<int>(facet_angle_error.size()) != facet_count)
        throw Error(ErrorKind::DimensionMismatch, "facet_angle_error length differs from facet_count");

    DeflectionGeometry g;
    g.deflection_angle = theta;
    g.wavelength = beam.wavelength;
    g.wavenumber = beam.wavenumber();
    g.transverse_wavenumber = g.wavenumber * std::sin(theta);
    g.amplitude = beam.amplitude;
    g.overlap_distance = theta > 0.0 ? overlap_distance(beam, theta) : std::numeric_limits<double>::infinity();

    g.facet_azimuths.resize(facet_count);
    g.wavevectors.resize(facet_count);
    for (int j = 0; j < facet_count; ++j) {
        const double phi = 2.0 * std::numbers::pi * j / facet_count;
        const double tilt = theta + (facet_angle_error.empty() ? 0.0 : facet_angle_error[j]);
        const double kt = g.wavenumber * std::sin(tilt);
        g.facet_azimuths[j] = phi;
        // Tilted toward the axis: transverse part along phi + pi.
        g.wavevectors[j] = {-kt * std::cos(phi), -kt * std::sin(phi), g.wavenumber * std::cos(tilt)};
    }
    return g;
}

DeflectionGeometry beam_wavevectors(const PrismSpec& prism, const BeamSpec& beam)
{
    const double theta = deflection_angle(prism);
    return make_geometry(prism.facet_count, theta, beam, prism.facet_angle_error);
}

std::optional<double> predicted_lattice_constant(const DeflectionGeometry& geometry)
{
    const double s = std::sin(geometry.deflection_angle);
    if (!(s > 0.0))
        return std::nullopt;
    switch (geometry.facet_count()) {
    case 3: return 2.0 * geometry.wavelength / (3.0 * s);
    case 4: return geometry.wavelength / (std::numbers::sqrt2 * s);
    default: return std::nullopt;
    }
}

} // namespace prismlattice
