#include "prismlattice/field.hpp"

#include "prismlattice/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <string>

namespace prismlattice {

void GridSpec::validate() const
{
    if (width < 16 || height < 16)
        throw Error(ErrorKind::InvalidSpec, "grid must be at least 16x16 pixels");
    if (!(pitch > 0.0) || !std::isfinite(pitch))
        throw Error(ErrorKind::InvalidSpec, "grid pitch must be positive");
    if (!std::isfinite(origin.x) || !std::isfinite(origin.y))
        throw Error(ErrorKind::InvalidSpec, "grid origin must be finite");
}

GridSpec GridSpec::centered(int width, int height, double pitch)
{
    return {width, height, pitch, {-0.5 * (width - 1) * pitch, -0.5 * (height - 1) * pitch}};
}

void CameraSpec::validate() const
{
    if (!(pixel_size > 0.0))
        throw Error(ErrorKind::InvalidSpec, "camera pixel_size must be positive");
    if (bit_depth < 8 || bit_depth > 16)
        throw Error(ErrorKind::InvalidSpec, "camera bit_depth must be in [8, 16]");
    if (!(exposure_gain >= 0.0) || !std::isfinite(exposure_gain))
        throw Error(ErrorKind::InvalidSpec, "camera exposure_gain must be non-negative");
    if (!(read_noise_sigma >= 0.0))
        throw Error(ErrorKind::InvalidSpec, "camera read_noise_sigma must be non-negative");
}

Raster to_raster(const IntensityField& field)
{
    return {field.values, field.grid.pitch, field.grid.origin};
}

Raster to_raster(const Frame& frame)
{
    Array2D<double> values(frame.image.width(), frame.image.height());
    auto src = frame.image.flat();
    auto dst = values.flat();
    std::transform(src.begin(), src.end(), dst.begin(), [](std::uint16_t v) { return static_cast<double>(v); });
    return {std::move(values), frame.camera.pixel_size, frame.origin};
}

namespace {

// Phases referenced to the first beam; a common offset cancels here.
std::vector<double> relative_phases(const DeflectionGeometry& geometry, const PhaseVector& phases)
{
    const int n = geometry.facet_count();
    if (phases.values.empty())
        return std::vector<double>(n, 0.0);
    if (static_cast<int>(phases.values.size()) != n)
        throw Error(ErrorKind::DimensionMismatch, "phase vector has " + std::to_string(phases.values.size()) +
                                                      " entries for " + std::to_string(n) + " facets");
    std::vector<double> rel(n);
    for (int j = 0; j < n; ++j)
        rel[j] = phases.values[j] - phases.values[0];
    return rel;
}

} // namespace

double plane_wave_intensity_at(const DeflectionGeometry& geometry, const PhaseVector& phases, double x, double y)
{
    const auto rel = relative_phases(geometry, phases);
    std::complex<double> sum{};
    for (int j = 0; j < geometry.facet_count(); ++j) {
        const auto& k = geometry.wavevectors[j];
        sum += std::polar(1.0, k.x * x + k.y * y + rel[j]);
    }
    const double a2 = geometry.amplitude * geometry.amplitude;
    return a2 / geometry.facet_count() * std::norm(sum);
}

IntensityField plane_wave_intensity(const DeflectionGeometry& geometry, const PhaseVector& phases,
                                    const GridSpec& grid)
{
    grid.validate();
    const auto rel = relative_phases(geometry, phases);
    const int n = geometry.facet_count();

    // e^{i k.r} = e^{i kx x} e^{i ky y}; tabulate both factors once.
    std::vector<std::complex<double>> col_phase(static_cast<std::size_t>(n) * grid.width);
    std::vector<std::complex<double>> row_phase(static_cast<std::size_t>(n) * grid.height);
    for (int j = 0; j < n; ++j) {
        const auto& k = geometry.wavevectors[j];
        for (int c = 0; c < grid.width; ++c)
            col_phase[static_cast<std::size_t>(j) * grid.width + c] = std::polar(1.0, k.x * grid.x(c));
        for (int r = 0; r < grid.height; ++r)
            row_phase[static_cast<std::size_t>(j) * grid.height + r] = std::polar(1.0, k.y * grid.y(r) + rel[j]);
    }

    const double scale = geometry.amplitude * geometry.amplitude / n;
    IntensityField field{grid, Array2D<double>(grid.width, grid.height)};
    for (int r = 0; r < grid.height; ++r) {
        auto out = field.values.row(r);
        for (int c = 0; c < grid.width; ++c) {
            std::complex<double> sum{};
            for (int j = 0; j < n; ++j)
                sum += col_phase[static_cast<std::size_t>(j) * grid.width + c] *
                       row_phase[static_cast<std::size_t>(j) * grid.height + r];
            out[c] = scale * std::norm(sum);
        }
    }
    return field;
}

int sector_index(double x, double y, int facet_count) noexcept
{
    const double width = 2.0 * std::numbers::pi / facet_count;
    double t = (std::atan2(y, x) + 0.5 * width) / width;
    t = std::fmod(t, static_cast<double>(facet_count));
    if (t < 0.0)
        t += facet_count;
    int idx = static_cast<int>(std::floor(t));
    if (idx >= facet_count)
        idx = 0;
    if (t == static_cast<double>(idx) && idx > 0)
        --idx;
    return idx;
}

IntensityField sector_envelope_field(const DeflectionGeometry& geometry, const PhaseVector& phases,
                                     const GridSpec& grid, const BeamSpec& beam, double z)
{
    grid.validate();
    beam.validate();
    if (!(z > 0.0))
        throw Error(ErrorKind::InvalidSpec, "propagation distance z must be positive");
    const double shift = z * std::tan(geometry.deflection_angle);
    if (shift > 3.0 * beam.waist)
        throw Error(ErrorKind::DegenerateGeometry, "sector translation z*tan(theta) exceeds 3 w0; sectors no longer overlap");

    const auto rel = relative_phases(geometry, phases);
    const int n = geometry.facet_count();
    std::vector<double> dx(n), dy(n);
    for (int j = 0; j < n; ++j) {
        dx[j] = shift * std::cos(geometry.facet_azimuths[j]);
        dy[j] = shift * std::sin(geometry.facet_azimuths[j]);
    }
    const double inv_w2 = 1.0 / (beam.waist * beam.waist);

    IntensityField field{grid, Array2D<double>(grid.width, grid.height)};
    for (int r = 0; r < grid.height; ++r) {
        const double y = grid.y(r);
        auto out = field.values.row(r);
        for (int c = 0; c < grid.width; ++c) {
            const double x = grid.x(c);
            std::complex<double> sum{};
            for (int j = 0; j < n; ++j) {
                // Point in the input plane that beam j carries to (x, y).
                const double sx = x + dx[j];
                const double sy = y + dy[j];
                if (sector_index(sx, sy, n) != j)
                    continue;
                const double amp = beam.amplitude * std::exp(-(sx * sx + sy * sy) * inv_w2);
                const auto& k = geometry.wavevectors[j];
                sum += std::polar(amp, k.x * x + k.y * y + rel[j]);
            }
            out[c] = std::norm(sum);
        }
    }
    return field;
}

namespace {

struct Overlap {
    int index;
    double weight;
};

// For each camera pixel, the grid pixels it covers and their fractional areas.
std::vector<std::vector<Overlap>> area_weights(int grid_count, double grid_pitch, double camera_pitch, int camera_count)
{
    std::vector<std::vector<Overlap>> weights(camera_count);
    for (int c = 0; c < camera_count; ++c) {
        const double lo = c * camera_pitch;
        const double hi = lo + camera_pitch;
        const int first = std::max(0, static_cast<int>(std::floor(lo / grid_pitch)));
        const int last = std::min(grid_count - 1, static_cast<int>(std::ceil(hi / grid_pitch)));
        for (int g = first; g <= last; ++g) {
            const double a = std::max(lo, g * grid_pitch);
            const double b = std::min(hi, (g + 1) * grid_pitch);
            if (b > a)
                weights[c].push_back({g, (b - a) / camera_pitch});
        }
    }
    return weights;
}

} // namespace

Frame render_frame(const IntensityField& field, const CameraSpec& camera, double timestamp)
{
    camera.validate();
    const auto& grid = field.grid;
    if (camera.pixel_size < grid.pitch * (1.0 - 1e-12))
        throw Error(ErrorKind::Resolution, "camera pixel is finer than the field grid");

    const double ratio = camera.pixel_size / grid.pitch;
    const int cam_w = static_cast<int>(std::floor(grid.width / ratio + 1e-9));
    const int cam_h = static_cast<int>(std::floor(grid.height / ratio + 1e-9));
    if (cam_w < 1 || cam_h < 1)
        throw Error(ErrorKind::Resolution, "field too small for a single camera pixel");

    const auto wx = area_weights(grid.width, grid.pitch, camera.pixel_size, cam_w);
    const auto wy = area_weights(grid.height, grid.pitch, camera.pixel_size, cam_h);

    // Separable box average: rows first, then columns.
    Array2D<double> partial(cam_w, grid.height);
    for (int r = 0; r < grid.height; ++r) {
        auto in = field.values.row(r);
        for (int c = 0; c < cam_w; ++c) {
            double acc = 0.0;
            for (const auto& o : wx[c])
                acc += o.weight * in[o.index];
            partial(c, r) = acc;
        }
    }

    std::mt19937_64 rng(camera.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double full_scale = std::ldexp(1.0, camera.bit_depth);
    const double max_count = camera.max_count();

    Frame frame;
    frame.image = Array2D<std::uint16_t>(cam_w, cam_h);
    frame.timestamp = timestamp;
    frame.camera = camera;
    frame.origin = {grid.origin.x - 0.5 * grid.pitch + 0.5 * camera.pixel_size,
                    grid.origin.y - 0.5 * grid.pitch + 0.5 * camera.pixel_size};
    for (int r = 0; r < cam_h; ++r) {
        for (int c = 0; c < cam_w; ++c) {
            double value = 0.0;
            for (const auto& o : wy[r])
                value += o.weight * partial(c, o.index);
            double counts = camera.exposure_gain * value * full_scale;
            if (camera.read_noise_sigma > 0.0)
                counts += camera.read_noise_sigma * noise(rng);
            counts = std::clamp(std::nearbyint(counts), 0.0, max_count);
            frame.image(c, r) = static_cast<std::uint16_t>(counts);
        }
    }
    return frame;
}

} // namespace prismlattice
