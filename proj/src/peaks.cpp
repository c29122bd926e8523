#include "prismlattice/analysis.hpp"
#include "prismlattice/error.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace prismlattice {

namespace {

// Uniform bucket grid for nearest-neighbour queries on scattered points.
class PointIndex {
public:
    PointIndex(std::span<const Vec2> points, double cell)
        : points_(points)
    {
        double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
        double x1 = -x0, y1 = -x0;
        for (const auto& p : points) {
            x0 = std::min(x0, p.x);
            y0 = std::min(y0, p.y);
            x1 = std::max(x1, p.x);
            y1 = std::max(y1, p.y);
        }
        const double extent = std::max(x1 - x0, y1 - y0);
        if (!(cell > 0.0) || !std::isfinite(cell))
            cell = extent > 0.0 ? extent / std::sqrt(static_cast<double>(points.size())) : 1.0;
        if (!(cell > 0.0))
            cell = 1.0;
        cell_ = cell;
        origin_ = {x0, y0};
        nx_ = std::max(1, static_cast<int>((x1 - x0) / cell_) + 1);
        ny_ = std::max(1, static_cast<int>((y1 - y0) / cell_) + 1);
        cells_.assign(static_cast<std::size_t>(nx_) * ny_, {});
        for (std::size_t i = 0; i < points.size(); ++i)
            cells_[slot(points[i])].push_back(static_cast<int>(i));
    }

    /// Nearest other point to point i; returns {index, distance}.
    std::pair<int, double> nearest(int i) const
    {
        const Vec2 p = points_[i];
        const int cx = cell_x(p.x), cy = cell_y(p.y);
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        const int max_ring = std::max(nx_, ny_);
        for (int ring = 0; ring <= max_ring; ++ring) {
            if (best >= 0 && (ring - 1) * cell_ > best_d)
                break;
            for (int gy = cy - ring; gy <= cy + ring; ++gy) {
                if (gy < 0 || gy >= ny_)
                    continue;
                const bool edge_row = gy == cy - ring || gy == cy + ring;
                for (int gx = cx - ring; gx <= cx + ring; gx += (edge_row ? 1 : 2 * ring)) {
                    if (gx >= 0 && gx < nx_) {
                        for (int j : cells_[static_cast<std::size_t>(gy) * nx_ + gx]) {
                            if (j == i)
                                continue;
                            const double d = std::hypot(points_[j].x - p.x, points_[j].y - p.y);
                            if (d < best_d || (d == best_d && j < best)) {
                                best_d = d;
                                best = j;
                            }
                        }
                    }
                    if (ring == 0)
                        break;
                }
            }
        }
        return {best, best_d};
    }

private:
    int cell_x(double x) const { return std::clamp(static_cast<int>((x - origin_.x) / cell_), 0, nx_ - 1); }
    int cell_y(double y) const { return std::clamp(static_cast<int>((y - origin_.y) / cell_), 0, ny_ - 1); }
    std::size_t slot(const Vec2& p) const { return static_cast<std::size_t>(cell_y(p.y)) * nx_ + cell_x(p.x); }

    std::span<const Vec2> points_;
    double cell_ = 1.0;
    Vec2 origin_{};
    int nx_ = 1, ny_ = 1;
    std::vector<std::vector<int>> cells_;
};

} // namespace

std::vector<PeakCandidate> detect_peaks(const Raster& image, double min_prominence, std::optional<double> expected_spacing)
{
    const auto& img = image.values;
    if (img.width() < 3 || img.height() < 3)
        throw Error(ErrorKind::NoPeaks, "image too small for peak detection");
    const auto [lo_it, hi_it] = std::minmax_element(img.flat().begin(), img.flat().end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo))
        throw Error(ErrorKind::NoPeaks, "image is constant");
    const double threshold = lo + std::clamp(min_prominence, 0.0, 1.0) * (hi - lo);

    std::vector<PeakCandidate> found;
    for (int y = 1; y + 1 < img.height(); ++y) {
        for (int x = 1; x + 1 < img.width(); ++x) {
            const double v = img(x, y);
            if (v < threshold)
                continue;
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0)
                        continue;
                    const double n = img(x + dx, y + dy);
                    // Plateaus resolve to their first pixel in raster order.
                    const bool before = dy < 0 || (dy == 0 && dx < 0);
                    if (before ? !(v > n) : !(v >= n)) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (is_max)
                found.push_back({x, y, v});
        }
    }

    if (expected_spacing && *expected_spacing > 0.0 && !found.empty()) {
        const double radius = 0.5 * *expected_spacing / image.pitch;
        std::vector<PeakCandidate> order = found;
        std::sort(order.begin(), order.end(), [](const PeakCandidate& a, const PeakCandidate& b) {
            if (a.value != b.value)
                return a.value > b.value;
            return a.y != b.y ? a.y < b.y : a.x < b.x;
        });
        const double cell = std::max(radius, 1.0);
        const int nx = static_cast<int>(img.width() / cell) + 1;
        const int ny = static_cast<int>(img.height() / cell) + 1;
        std::vector<std::vector<int>> buckets(static_cast<std::size_t>(nx) * ny);
        std::vector<PeakCandidate> kept;
        for (const auto& c : order) {
            const int bx = static_cast<int>(c.x / cell), by = static_cast<int>(c.y / cell);
            bool suppressed = false;
            for (int gy = std::max(0, by - 1); gy <= std::min(ny - 1, by + 1) && !suppressed; ++gy)
                for (int gx = std::max(0, bx - 1); gx <= std::min(nx - 1, bx + 1) && !suppressed; ++gx)
                    for (int k : buckets[static_cast<std::size_t>(gy) * nx + gx])
                        if (std::hypot(kept[k].x - c.x, kept[k].y - c.y) < radius) {
                            suppressed = true;
                            break;
                        }
            if (!suppressed) {
                buckets[static_cast<std::size_t>(by) * nx + bx].push_back(static_cast<int>(kept.size()));
                kept.push_back(c);
            }
        }
        found = std::move(kept);
        std::sort(found.begin(), found.end(), [](const PeakCandidate& a, const PeakCandidate& b) {
            return a.y != b.y ? a.y < b.y : a.x < b.x;
        });
    }

    if (found.empty())
        throw Error(ErrorKind::NoPeaks, "no local maximum passes the prominence threshold");
    return found;
}

SpacingEstimate estimate_lattice_constant(std::span<const Vec2> centers, std::optional<double> hint)
{
    const int n = static_cast<int>(centers.size());
    if (n < 2)
        throw Error(ErrorKind::InsufficientData, "need at least two peaks to estimate a spacing");

    const PointIndex index(centers, hint.value_or(0.0));
    std::vector<int> nearest(n);
    std::vector<double> nearest_d(n);
    for (int i = 0; i < n; ++i)
        std::tie(nearest[i], nearest_d[i]) = index.nearest(i);

    std::vector<double> sorted_d = nearest_d;
    std::nth_element(sorted_d.begin(), sorted_d.begin() + n / 2, sorted_d.end());
    double median = sorted_d[n / 2];
    if (n % 2 == 0) {
        const double lower = *std::max_element(sorted_d.begin(), sorted_d.begin() + n / 2);
        median = 0.5 * (median + lower);
    }

    std::vector<double> pairs;
    for (int i = 0; i < n; ++i) {
        const int j = nearest[i];
        if (j > i && nearest[j] == i && nearest_d[i] <= 1.5 * median)
            pairs.push_back(nearest_d[i]);
    }
    if (pairs.empty())
        throw Error(ErrorKind::InsufficientData, "no mutual nearest-neighbour pairs");

    SpacingEstimate est;
    est.sample_count = static_cast<int>(pairs.size());
    est.mean_spacing = std::accumulate(pairs.begin(), pairs.end(), 0.0) / est.sample_count;
    double ss = 0.0;
    for (double d : pairs)
        ss += (d - est.mean_spacing) * (d - est.mean_spacing);
    est.rmse = std::sqrt(ss / est.sample_count);
    if (est.sample_count > 1) {
        const double t = boost::math::quantile(boost::math::students_t_distribution<double>(est.sample_count - 1), 0.975);
        est.ci95 = t * std::sqrt(ss / (est.sample_count - 1)) / std::sqrt(static_cast<double>(est.sample_count));
    } else {
        est.ci95 = std::numeric_limits<double>::quiet_NaN();
    }
    return est;
}

SpacingEstimate estimate_lattice_constant(std::span<const PeakFit> peaks, std::optional<double> hint)
{
    std::vector<Vec2> centers;
    centers.reserve(peaks.size());
    for (const auto& p : peaks)
        centers.push_back(p.center);
    return estimate_lattice_constant(std::span<const Vec2>(centers), hint);
}

LatticeAnalysis analyze_lattice(const Raster& image, const AnalysisOptions& options)
{
    LatticeAnalysis out;

    std::optional<Spectrum> spectrum;
    std::optional<RingInfo> ring;
    auto need_ring = [&] {
        if (!spectrum) {
            spectrum = fft_spectrum(image);
            ring = find_dominant_ring(*spectrum);
        }
    };

    if (options.expected_spacing) {
        out.spacing_scale = *options.expected_spacing;
    } else {
        need_ring();
        out.spacing_scale = 1.0 / ring->radius;
    }

    const auto candidates = detect_peaks(image, options.min_prominence, out.spacing_scale);
    out.window_radius = std::max(2, static_cast<int>(std::lround(options.window_fraction * out.spacing_scale / image.pitch)));

    const int w = image.values.width(), h = image.values.height(), r = out.window_radius;
    for (const auto& c : candidates) {
        if (c.x - r < 0 || c.y - r < 0 || c.x + r >= w || c.y + r >= h) {
            ++out.rejected_candidates;
            continue;
        }
        try {
            out.peaks.push_back(fit_peak_gaussian(image, c, r));
        } catch (const Error&) {
            ++out.rejected_candidates;
        }
    }
    std::sort(out.peaks.begin(), out.peaks.end(), [](const PeakFit& a, const PeakFit& b) {
        return a.center_px.y != b.center_px.y ? a.center_px.y < b.center_px.y : a.center_px.x < b.center_px.x;
    });
    out.spacing = estimate_lattice_constant(std::span<const PeakFit>(out.peaks), out.spacing_scale);

    if (options.symmetry) {
        need_ring();
        out.symmetry = symmetry_score(*spectrum, options.orders);
    }
    if (options.flatness) {
        std::optional<double> fringe;
        if (ring)
            fringe = ring->radius;
        out.flatness = envelope_flatness(image, options.central_fraction, fringe);
    }
    return out;
}

} // namespace prismlattice
