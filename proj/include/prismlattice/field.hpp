#pragma once

#include "prismlattice/array2d.hpp"
#include "prismlattice/optics.hpp"

#include <cstdint>
#include <vector>

namespace prismlattice {

/// Physical sampling grid. `origin` is the coordinate of the centre of
/// pixel (0, 0); x grows with the column index, y with the row index.
struct GridSpec {
    int width = 1024;
    int height = 1024;
    double pitch = 1e-6;
    Vec2 origin{};

    void validate() const;
    double x(int col) const noexcept { return origin.x + col * pitch; }
    double y(int row) const noexcept { return origin.y + row * pitch; }

    /// Grid whose optical axis (0, 0) sits at the geometric image centre.
    static GridSpec centered(int width, int height, double pitch);
};

struct PhaseVector {
    std::vector<double> values;
};

struct IntensityField {
    GridSpec grid;
    Array2D<double> values;
};

struct CameraSpec {
    double pixel_size = 2.8e-6;
    int bit_depth = 12;
    /// Fraction of 2^bit_depth counts produced by unit intensity.
    double exposure_gain = 1.0;
    double read_noise_sigma = 0.0; ///< counts
    std::uint64_t seed = 0;

    void validate() const;
    std::uint32_t max_count() const noexcept { return (1u << bit_depth) - 1u; }
};

struct Frame {
    Array2D<std::uint16_t> image;
    double timestamp = 0.0;
    CameraSpec camera;
    Vec2 origin{}; ///< physical centre of pixel (0, 0)
};

/// Analysis input: real-valued samples on a square pixel lattice.
struct Raster {
    Array2D<double> values;
    double pitch = 1.0;
    Vec2 origin{};
};

Raster to_raster(const IntensityField& field);
Raster to_raster(const Frame& frame);

/// Coherent sum of the n deflected plane waves, |sum_j (E0/sqrt n) e^{i(k_j.r + d_j)}|^2,
/// using the transverse wavevector components. Only phase differences enter.
IntensityField plane_wave_intensity(const DeflectionGeometry& geometry, const PhaseVector& phases,
                                    const GridSpec& grid);

/// Single-point evaluation of the plane-wave model at (x, y).
double plane_wave_intensity_at(const DeflectionGeometry& geometry, const PhaseVector& phases, double x, double y);

/// Gaussian beam cut into n angular sectors, each sector translated by
/// z tan(theta) toward the axis and carrying its own tilted plane wave.
IntensityField sector_envelope_field(const DeflectionGeometry& geometry, const PhaseVector& phases,
                                     const GridSpec& grid, const BeamSpec& beam, double z);

/// Index of the facet sector that owns the input-plane point (x, y).
/// Points exactly on a sector boundary belong to the lower-index facet.
int sector_index(double x, double y, int facet_count) noexcept;

/// Area-averaged resampling onto the camera pitch, gain, seeded read noise,
/// clamping and quantization.
Frame render_frame(const IntensityField& field, const CameraSpec& camera, double timestamp);

} // namespace prismlattice
