#include "prismlattice/projection.hpp"

#include "prismlattice/error.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace prismlattice {

void TelescopeSpec::validate() const
{
    if (!(f_obj1 > 0.0) || !(f_obj2 > 0.0))
        throw Error(ErrorKind::InvalidSpec, "telescope focal lengths must be positive");
}

void SpeciesSpec::validate() const
{
    if (!(mass > 0.0) || !(transition_wavelength > 0.0) || !(natural_linewidth > 0.0))
        throw Error(ErrorKind::InvalidSpec, "species mass, transition wavelength and linewidth must be positive");
}

SpeciesSpec parse_species(const std::string& text)
{
    SpeciesSpec s;
    std::map<std::string, bool> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos)
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::Config, "species line " + std::to_string(lineno) + ": expected key = value");
        auto trim = [](std::string v) {
            const auto first = v.find_first_not_of(" \t\r");
            const auto last = v.find_last_not_of(" \t\r");
            return first == std::string::npos ? std::string{} : v.substr(first, last - first + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto number = [&]() {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(value, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != value.size())
                throw Error(ErrorKind::Config, "species line " + std::to_string(lineno) + ": '" + value + "' is not a number");
            return v;
        };
        if (key == "name")
            s.name = value;
        else if (key == "mass_kg")
            s.mass = number();
        else if (key == "transition_wavelength_m")
            s.transition_wavelength = number();
        else if (key == "linewidth_rad_s")
            s.natural_linewidth = number();
        else
            throw Error(ErrorKind::Config, "species line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        seen[key] = true;
    }
    for (const char* required : {"mass_kg", "transition_wavelength_m", "linewidth_rad_s"})
        if (!seen.count(required))
            throw Error(ErrorKind::Config, std::string("species data lacks ") + required);
    s.validate();
    return s;
}

SpeciesSpec load_species(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::Io, "cannot open species file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_species(ss.str());
}

double demagnification(const TelescopeSpec& telescope)
{
    telescope.validate();
    return telescope.f_obj1 / telescope.f_obj2;
}

double project_constant(double length, double factor, ProjectionDirection direction)
{
    if (!(factor > 0.0))
        throw Error(ErrorKind::InvalidSpec, "projection factor must be positive");
    return direction == ProjectionDirection::Demagnify ? length / factor : length * factor;
}

double recoil_energy(const SpeciesSpec& species, double lattice_constant)
{
    species.validate();
    if (!(lattice_constant > 0.0))
        throw Error(ErrorKind::InvalidSpec, "lattice constant must be positive");
    const double h = constants::planck;
    return h * h / (8.0 * species.mass * lattice_constant * lattice_constant);
}

double photon_recoil_energy(const SpeciesSpec& species, double wavelength)
{
    species.validate();
    if (!(wavelength > 0.0))
        throw Error(ErrorKind::InvalidSpec, "wavelength must be positive");
    const double h = constants::planck;
    return h * h / (2.0 * species.mass * wavelength * wavelength);
}

double dipole_potential_coefficient(const SpeciesSpec& species, double lattice_wavelength)
{
    species.validate();
    if (!(lattice_wavelength > 0.0))
        throw Error(ErrorKind::InvalidSpec, "lattice wavelength must be positive");
    const double c = constants::speed_of_light;
    const double w0 = 2.0 * std::numbers::pi * c / species.transition_wavelength;
    const double wl = 2.0 * std::numbers::pi * c / lattice_wavelength;
    const double detuning = wl - w0;
    if (std::abs(detuning) <= 1e-12 * w0)
        throw Error(ErrorKind::ZeroDetuning, "lattice light is resonant with the transition");
    return 3.0 * std::numbers::pi * c * c / (2.0 * w0 * w0 * w0) * (species.natural_linewidth / detuning);
}

DepthEstimate lattice_depth_er(double peak_intensity, const SpeciesSpec& species, double lattice_wavelength,
                               double lattice_constant, double min_intensity)
{
    if (!(peak_intensity >= 0.0) || !(min_intensity >= 0.0) || min_intensity > peak_intensity)
        throw Error(ErrorKind::InvalidSpec, "intensities must satisfy 0 <= min <= peak");
    const double coeff = dipole_potential_coefficient(species, lattice_wavelength);
    const double c = constants::speed_of_light;

    DepthEstimate d;
    d.detuning = 2.0 * std::numbers::pi * c / lattice_wavelength - 2.0 * std::numbers::pi * c / species.transition_wavelength;
    d.repulsive = coeff > 0.0;
    d.potential_depth = std::abs(coeff) * (peak_intensity - min_intensity);
    d.recoil_energy = recoil_energy(species, lattice_constant);
    d.photon_recoil_energy = photon_recoil_energy(species, lattice_wavelength);
    d.depth_er = d.potential_depth / d.recoil_energy;
    d.depth_photon_er = d.potential_depth / d.photon_recoil_energy;
    return d;
}

DepthChain depth_chain(double power, double waist, const TelescopeSpec& telescope, int facet_count,
                       double lattice_wavelength, double lattice_constant, const SpeciesSpec& species)
{
    if (!(power >= 0.0) || !(waist > 0.0) || facet_count < 2)
        throw Error(ErrorKind::InvalidSpec, "depth chain needs power >= 0, waist > 0 and n >= 2");
    DepthChain chain;
    chain.demagnification = demagnification(telescope);
    chain.atom_plane_waist = waist / chain.demagnification;
    chain.envelope_intensity = 2.0 * power / (std::numbers::pi * chain.atom_plane_waist * chain.atom_plane_waist);
    chain.lattice_peak_intensity = facet_count * chain.envelope_intensity;
    chain.peak_to_valley = lattice_depth_er(chain.lattice_peak_intensity, species, lattice_wavelength, lattice_constant);
    chain.envelope_referenced = lattice_depth_er(chain.envelope_intensity, species, lattice_wavelength, lattice_constant);
    return chain;
}

} // namespace prismlattice
