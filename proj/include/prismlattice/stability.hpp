#pragma once

#include "prismlattice/analysis.hpp"
#include "prismlattice/field.hpp"

#include <optional>
#include <string>
#include <vector>

namespace prismlattice {

/// Abstract instability sources applied frame by frame.
struct NoiseModel {
    double phase_jitter_sigma = 0.0;  ///< rad per facet per frame (random-walk step)
    double pointing_drift_rate = 0.0; ///< rad/s of common beam tilt
    double pointing_drift_azimuth = 0.0; ///< direction of the resulting pattern shift, rad
    double intensity_rms = 0.0;       ///< per-pixel multiplicative noise, fraction
    std::uint64_t seed = 0;

    void validate() const;
};

struct SeriesConfig {
    double interval = 0.6; ///< seconds between frames
    int frame_count = 200;
    CameraSpec camera;
    GridSpec grid = GridSpec::centered(512, 512, 0.5e-6);
    PhaseVector initial_phases; ///< empty means all zero

    void validate() const;
};

/// Relative-error ceilings for the spacing RMSE and the position drift that
/// mark a measurement as comparable to the reference stability data.
inline constexpr double kEnvelopeSpacingRmseRelative = 0.0114;
inline constexpr double kEnvelopeDriftRelative = 0.0161;

/// Frames at t = i * interval. Phases follow a per-facet random walk, the
/// pattern shifts by overlap_distance * tan(rate * t), and every grid pixel
/// gets independent multiplicative intensity noise before rendering.
std::vector<Frame> generate_time_series(const DeflectionGeometry& geometry, const BeamSpec& beam,
                                        const NoiseModel& noise, const SeriesConfig& config);

struct FrameAnalysis {
    std::size_t index = 0;
    double time = 0.0;
    std::optional<SpacingEstimate> spacing;
    std::vector<PeakFit> peaks;
    Vec2 illumination_centroid{};
    std::string error; ///< set when the frame could not be analysed
};

/// Runs the lattice pipeline on every frame. Frames that fail keep their
/// slot with `error` set; the series continues.
std::vector<FrameAnalysis> spacing_series(const std::vector<Frame>& frames, const AnalysisOptions& options = {});

struct SeriesPoint {
    double time = 0.0;
    double spacing = 0.0;
    double ci95 = 0.0;
};

/// Per-frame position of the reference site: the fitted peak nearest the
/// illumination centroid of the first good frame, then followed frame to
/// frame by nearest fitted centre.
std::vector<std::optional<Vec2>> track_reference_positions(const std::vector<FrameAnalysis>& series);

struct StabilityReport {
    std::vector<SeriesPoint> spacing_series;
    double mean_spacing = 0.0;
    double spacing_rmse = 0.0;          ///< about the series mean
    double spacing_rmse_relative = 0.0;
    double position_drift_max = 0.0;
    double position_drift_relative = 0.0;
    bool within_reference_envelope = false;
    int failed_frames = 0;
};

StabilityReport stability_metrics(const std::vector<SeriesPoint>& series, const std::vector<Vec2>& positions);

/// Convenience: spacing_series + tracking + metrics, skipping failed frames.
StabilityReport stability_report(const std::vector<FrameAnalysis>& series);

} // namespace prismlattice
