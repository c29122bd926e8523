#pragma once

#include "prismlattice/field.hpp"

#include <map>
#include <optional>
#include <span>
#include <vector>

namespace prismlattice {

struct PeakCandidate {
    int x = 0;
    int y = 0;
    double value = 0.0;
};

/// Isotropic 2D Gaussian plus constant offset fitted around one site.
struct PeakFit {
    Vec2 center{};            ///< metres
    Vec2 center_px{};         ///< pixel coordinates
    double amplitude = 0.0;   ///< image units above the offset
    double offset = 0.0;
    double width_sigma = 0.0; ///< metres
    /// Radius of the 95% joint confidence disk for the centre, metres.
    double ci95_center = 0.0;
    int iterations = 0;
};

struct SpacingEstimate {
    double mean_spacing = 0.0;
    int sample_count = 0;
    double rmse = 0.0;  ///< population spread of the pair distances about the mean
    double ci95 = 0.0;  ///< half-width of the 95% interval of the mean (NaN for one pair)
};

enum class Window { None, RaisedCosine };

/// DC-centred magnitude spectrum. Bin (i, j) sits at spatial frequency
/// ((i - center_x) * step_x, (j - center_y) * step_y) in 1/m.
struct Spectrum {
    Array2D<double> magnitude;
    double step_x = 0.0;
    double step_y = 0.0;
    int center_x = 0;
    int center_y = 0;
};

struct RingInfo {
    double radius = 0.0;      ///< 1/m
    double radius_bins = 0.0;
    double peak = 0.0;
    double noise_floor = 0.0;
};

struct SymmetryReport {
    int best_order = 0;
    std::map<int, double> score_by_order;
    double ring_radius = 0.0; ///< 1/m
};

inline const std::vector<int> kDefaultSymmetryOrders{2, 3, 4, 5, 6, 7, 8, 9, 10, 12};

/// Local maxima at least `min_prominence` of the way from the image minimum
/// to its maximum. With an expected spacing, maxima closer than half of it
/// to a brighter one are suppressed. Sorted by (y, x).
std::vector<PeakCandidate> detect_peaks(const Raster& image, double min_prominence,
                                        std::optional<double> expected_spacing = std::nullopt);

/// Levenberg-Marquardt fit over the (2r+1)^2 window centred on the candidate.
PeakFit fit_peak_gaussian(const Raster& image, const PeakCandidate& candidate, int window_radius);

/// Mean nearest-neighbour distance over mutual-nearest pairs; pairs longer
/// than 1.5x the median nearest distance are discarded.
SpacingEstimate estimate_lattice_constant(std::span<const PeakFit> peaks,
                                          std::optional<double> expected_spacing_hint = std::nullopt);
SpacingEstimate estimate_lattice_constant(std::span<const Vec2> centers,
                                          std::optional<double> expected_spacing_hint = std::nullopt);

Spectrum fft_spectrum(const Raster& image, Window window = Window::RaisedCosine);

/// Non-DC rings, innermost first: local maxima of the radial profile that
/// stand clear of the noise floor. Throws NoRing when there are none.
std::vector<RingInfo> find_rings(const Spectrum& spectrum);

/// Strongest ring of the spectrum.
RingInfo find_dominant_ring(const Spectrum& spectrum);

/// Innermost ring carrying at least a quarter of the strongest ring's peak.
double lowest_fringe_frequency(const Spectrum& spectrum);

SymmetryReport symmetry_score(const Spectrum& spectrum, std::span<const int> candidate_orders = kDefaultSymmetryOrders);

/// std/mean of the low-passed image over the central disk of radius
/// `central_fraction` times the illuminated radius. The fringe frequency sets
/// the low-pass cutoff (half of it); when absent it is taken from the
/// innermost fringe ring of the spectrum, and no filtering happens if there
/// is none.
double envelope_flatness(const Raster& image, double central_fraction,
                         std::optional<double> fringe_frequency = std::nullopt);

/// Displacement s (metres) such that moved(r) ~ reference(r - s), from the
/// sub-pixel peak of the circular cross-correlation.
Vec2 estimate_shift(const Raster& reference, const Raster& moved);

struct AnalysisOptions {
    double min_prominence = 0.5;
    std::optional<double> expected_spacing;  ///< suppression scale; from the spectrum when absent
    double window_fraction = 0.4;            ///< fit window radius / spacing scale
    bool symmetry = true;
    bool flatness = true;
    double central_fraction = 0.5;
    std::vector<int> orders = kDefaultSymmetryOrders;
};

struct LatticeAnalysis {
    std::vector<PeakFit> peaks;               ///< sorted by (y, x) of the fitted centre
    SpacingEstimate spacing;
    double spacing_scale = 0.0;               ///< suppression/window scale used, metres
    int window_radius = 0;
    int rejected_candidates = 0;              ///< near the border or failed to fit
    std::optional<SymmetryReport> symmetry;
    std::optional<double> flatness;
};

/// Peak detection, per-site Gaussian fits, spacing, and optionally symmetry
/// and flatness, in one pass.
LatticeAnalysis analyze_lattice(const Raster& image, const AnalysisOptions& options = {});

} // namespace prismlattice
