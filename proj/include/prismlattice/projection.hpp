#pragma once

#include <filesystem>
#include <string>

namespace prismlattice {

namespace constants {
inline constexpr double planck = 6.62607015e-34;     ///< J s
inline constexpr double speed_of_light = 299792458.0; ///< m/s
} // namespace constants

/// Two-lens relay; the image scales by f_obj2 / f_obj1.
struct TelescopeSpec {
    double f_obj1 = 75e-3;
    double f_obj2 = 4e-3;
    void validate() const;
};

/// Two-level description of an atomic species.
struct SpeciesSpec {
    std::string name;
    double mass = 0.0;                  ///< kg
    double transition_wavelength = 0.0; ///< m
    double natural_linewidth = 0.0;     ///< rad/s
    void validate() const;
};

/// Parses `key = value` lines (mass_kg, transition_wavelength_m,
/// linewidth_rad_s, optional name); unknown keys are rejected.
SpeciesSpec parse_species(const std::string& text);
SpeciesSpec load_species(const std::filesystem::path& path);

double demagnification(const TelescopeSpec& telescope);

enum class ProjectionDirection { Demagnify, Magnify };

double project_constant(double length, double factor, ProjectionDirection direction);

/// Lattice recoil energy h^2 / (8 m a^2), i.e. hbar^2 k_L^2 / 2m with k_L = pi / a.
double recoil_energy(const SpeciesSpec& species, double lattice_constant);

/// Single-photon recoil h^2 / (2 m lambda^2) of the lattice light.
double photon_recoil_energy(const SpeciesSpec& species, double wavelength);

/// Signed two-level rotating-wave dipole potential per unit intensity,
/// (3 pi c^2 / 2 w0^3) (Gamma / Delta), Delta = w_L - w0. Positive means
/// repulsive (blue detuning). J per W/m^2.
double dipole_potential_coefficient(const SpeciesSpec& species, double lattice_wavelength);

struct DepthEstimate {
    double depth_er = 0.0;             ///< |U_max - U_min| / E_r with E_r = h^2/(8 m a^2)
    double depth_photon_er = 0.0;      ///< same depth over the photon recoil of the lattice light
    double potential_depth = 0.0;      ///< |U_max - U_min|, J
    double recoil_energy = 0.0;        ///< J, lattice-constant convention
    double photon_recoil_energy = 0.0; ///< J
    double detuning = 0.0;             ///< w_L - w0, rad/s
    bool repulsive = false;            ///< sites sit at intensity minima
};

/// Depth of the potential between the brightest (`peak_intensity`) and
/// darkest (`min_intensity`) point of a unit cell.
DepthEstimate lattice_depth_er(double peak_intensity, const SpeciesSpec& species, double lattice_wavelength,
                               double lattice_constant, double min_intensity = 0.0);

/// Power -> atom-plane intensity -> depth, for an n-beam lattice projected
/// through a telescope.
struct DepthChain {
    double demagnification = 0.0;
    double atom_plane_waist = 0.0;     ///< m
    double envelope_intensity = 0.0;   ///< Gaussian peak 2P / (pi w^2), W/m^2
    double lattice_peak_intensity = 0.0; ///< n times the envelope intensity
    DepthEstimate peak_to_valley;       ///< lattice maximum vs dark fringe
    DepthEstimate envelope_referenced;  ///< envelope intensity vs dark fringe
};

DepthChain depth_chain(double power, double waist, const TelescopeSpec& telescope, int facet_count,
                       double lattice_wavelength, double lattice_constant, const SpeciesSpec& species);

} // namespace prismlattice
