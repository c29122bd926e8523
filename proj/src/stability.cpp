#include "prismlattice/stability.hpp"

#include "prismlattice/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

namespace prismlattice {

void NoiseModel::validate() const
{
    if (!(phase_jitter_sigma >= 0.0) || !(pointing_drift_rate >= 0.0) || !(intensity_rms >= 0.0))
        throw Error(ErrorKind::InvalidSpec, "noise amplitudes must be non-negative");
}

void SeriesConfig::validate() const
{
    if (!(interval > 0.0))
        throw Error(ErrorKind::InvalidSpec, "series interval must be positive");
    if (frame_count < 2)
        throw Error(ErrorKind::InsufficientData, "a series needs at least two frames");
    camera.validate();
    grid.validate();
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

Vec2 illumination_centroid(const Raster& r)
{
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (int y = 0; y < r.values.height(); ++y)
        for (int x = 0; x < r.values.width(); ++x) {
            const double v = r.values(x, y);
            sw += v;
            sx += v * x;
            sy += v * y;
        }
    if (!(sw > 0.0))
        return {r.origin.x + 0.5 * (r.values.width() - 1) * r.pitch, r.origin.y + 0.5 * (r.values.height() - 1) * r.pitch};
    return {r.origin.x + sx / sw * r.pitch, r.origin.y + sy / sw * r.pitch};
}

} // namespace

std::vector<Frame> generate_time_series(const DeflectionGeometry& geometry, const BeamSpec& beam,
                                        const NoiseModel& noise, const SeriesConfig& config)
{
    noise.validate();
    config.validate();
    beam.validate();
    const int n = geometry.facet_count();
    std::vector<double> base(n, 0.0);
    if (!config.initial_phases.values.empty()) {
        if (static_cast<int>(config.initial_phases.values.size()) != n)
            throw Error(ErrorKind::DimensionMismatch, "initial phase vector length differs from facet count");
        for (int j = 0; j < n; ++j)
            base[j] = config.initial_phases.values[j] - config.initial_phases.values[0];
    }
    if (noise.pointing_drift_rate > 0.0 && !std::isfinite(geometry.overlap_distance))
        throw Error(ErrorKind::DegenerateGeometry, "pointing drift needs a finite overlap distance");

    DeflectionGeometry g = geometry;
    g.amplitude = beam.amplitude;

    std::mt19937_64 walk_rng(mix_seed(noise.seed, 1, 0));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> walk(n, 0.0);

    std::vector<Frame> frames;
    frames.reserve(config.frame_count);
    for (int i = 0; i < config.frame_count; ++i) {
        const double t = i * config.interval;
        if (i > 0 && noise.phase_jitter_sigma > 0.0)
            for (auto& w : walk)
                w += noise.phase_jitter_sigma * gauss(walk_rng);

        // The common-mode part is removed before it can touch the field.
        PhaseVector phases{std::vector<double>(n)};
        for (int j = 0; j < n; ++j)
            phases.values[j] = base[j] + (walk[j] - walk[0]);

        GridSpec shifted = config.grid;
        if (noise.pointing_drift_rate > 0.0) {
            const double s = geometry.overlap_distance * std::tan(noise.pointing_drift_rate * t);
            shifted.origin.x -= s * std::cos(noise.pointing_drift_azimuth);
            shifted.origin.y -= s * std::sin(noise.pointing_drift_azimuth);
        }
        IntensityField field = plane_wave_intensity(g, phases, shifted);
        field.grid = config.grid;

        if (noise.intensity_rms > 0.0) {
            std::mt19937_64 rng(mix_seed(noise.seed, 2, static_cast<std::uint64_t>(i)));
            for (double& v : field.values.flat())
                v *= std::max(0.0, 1.0 + noise.intensity_rms * gauss(rng));
        }

        CameraSpec camera = config.camera;
        camera.seed = mix_seed(config.camera.seed, 3, static_cast<std::uint64_t>(i));
        frames.push_back(render_frame(field, camera, t));
    }
    return frames;
}

std::vector<FrameAnalysis> spacing_series(const std::vector<Frame>& frames, const AnalysisOptions& options)
{
    AnalysisOptions opts = options;
    opts.symmetry = false;
    opts.flatness = false;

    std::vector<FrameAnalysis> out;
    out.reserve(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        FrameAnalysis fa;
        fa.index = i;
        fa.time = frames[i].timestamp;
        const Raster raster = to_raster(frames[i]);
        fa.illumination_centroid = illumination_centroid(raster);
        try {
            auto analysis = analyze_lattice(raster, opts);
            fa.spacing = analysis.spacing;
            fa.peaks = std::move(analysis.peaks);
        } catch (const Error& e) {
            fa.error = "frame " + std::to_string(i) + ": " + e.what();
        }
        out.push_back(std::move(fa));
    }
    return out;
}

std::vector<std::optional<Vec2>> track_reference_positions(const std::vector<FrameAnalysis>& series)
{
    std::vector<std::optional<Vec2>> positions(series.size());
    std::optional<Vec2> previous;
    auto nearest = [](const std::vector<PeakFit>& peaks, Vec2 target) -> std::optional<Vec2> {
        std::optional<Vec2> best;
        double best_d = std::numeric_limits<double>::infinity();
        for (const auto& p : peaks) {
            const double d = std::hypot(p.center.x - target.x, p.center.y - target.y);
            if (d < best_d) {
                best_d = d;
                best = p.center;
            }
        }
        return best;
    };
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& fa = series[i];
        if (!fa.error.empty() || fa.peaks.empty())
            continue;
        positions[i] = nearest(fa.peaks, previous ? *previous : fa.illumination_centroid);
        previous = positions[i];
    }
    return positions;
}

StabilityReport stability_metrics(const std::vector<SeriesPoint>& series, const std::vector<Vec2>& positions)
{
    if (series.size() < 2)
        throw Error(ErrorKind::InsufficientData, "stability metrics need at least two valid frames");

    StabilityReport report;
    report.spacing_series = series;
    double sum = 0.0;
    for (const auto& p : series)
        sum += p.spacing;
    report.mean_spacing = sum / series.size();
    double ss = 0.0;
    for (const auto& p : series)
        ss += (p.spacing - report.mean_spacing) * (p.spacing - report.mean_spacing);
    report.spacing_rmse = std::sqrt(ss / series.size());
    report.spacing_rmse_relative = report.spacing_rmse / report.mean_spacing;

    for (const auto& p : positions) {
        const double d = std::hypot(p.x - positions.front().x, p.y - positions.front().y);
        report.position_drift_max = std::max(report.position_drift_max, d);
    }
    report.position_drift_relative = report.position_drift_max / report.mean_spacing;
    report.within_reference_envelope = report.spacing_rmse_relative <= kEnvelopeSpacingRmseRelative &&
                                       report.position_drift_relative <= kEnvelopeDriftRelative;
    return report;
}

StabilityReport stability_report(const std::vector<FrameAnalysis>& series)
{
    const auto tracked = track_reference_positions(series);
    std::vector<SeriesPoint> points;
    std::vector<Vec2> positions;
    int failed = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!series[i].spacing) {
            ++failed;
            continue;
        }
        points.push_back({series[i].time, series[i].spacing->mean_spacing, series[i].spacing->ci95});
        if (tracked[i])
            positions.push_back(*tracked[i]);
    }
    auto report = stability_metrics(points, positions);
    report.failed_frames = failed;
    return report;
}

} // namespace prismlattice
