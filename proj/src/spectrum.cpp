#include "prismlattice/analysis.hpp"
#include "prismlattice/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <limits>
#include <mutex>
#include <numeric>
#include <numbers>

namespace prismlattice {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};
struct PlanDestroy {
    void operator()(fftw_plan p) const noexcept
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(p);
    }
};
using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDestroy>;
using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

RealBuffer alloc_real(std::size_t n) { return RealBuffer(fftw_alloc_real(n)); }
ComplexBuffer alloc_complex(std::size_t n) { return ComplexBuffer(fftw_alloc_complex(n)); }

/// Real-to-half-complex transform of a W x H image; output is H x (W/2+1).
class RealFft2D {
public:
    RealFft2D(int width, int height)
        : w_(width), h_(height), hw_(width / 2 + 1),
          real_(alloc_real(static_cast<std::size_t>(width) * height)),
          spec_(alloc_complex(static_cast<std::size_t>(height) * hw_))
    {
        std::lock_guard lock(planner_mutex());
        forward_.reset(fftw_plan_dft_r2c_2d(h_, w_, real_.get(), spec_.get(), FFTW_ESTIMATE));
        backward_.reset(fftw_plan_dft_c2r_2d(h_, w_, spec_.get(), real_.get(), FFTW_ESTIMATE));
    }

    double* real() { return real_.get(); }
    std::complex<double>* spec() { return reinterpret_cast<std::complex<double>*>(spec_.get()); }
    int half_width() const { return hw_; }
    void forward() { fftw_execute(forward_.get()); }
    /// Unnormalized inverse; divide by W*H. Destroys the spectrum buffer.
    void backward() { fftw_execute(backward_.get()); }

private:
    int w_, h_, hw_;
    RealBuffer real_;
    ComplexBuffer spec_;
    Plan forward_, backward_;
};

double hann(int i, int n)
{
    return 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (i + 0.5) / n);
}

double bilinear(const Array2D<double>& a, double x, double y)
{
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    if (x0 < 0 || y0 < 0 || x0 + 1 >= a.width() || y0 + 1 >= a.height())
        return 0.0;
    const double fx = x - x0, fy = y - y0;
    return (1 - fx) * (1 - fy) * a(x0, y0) + fx * (1 - fy) * a(x0 + 1, y0) + (1 - fx) * fy * a(x0, y0 + 1) +
           fx * fy * a(x0 + 1, y0 + 1);
}

constexpr double kDcExclusionBins = 5.0;
constexpr double kRingSnr = 10.0;
constexpr double kRingProminence = 3.0;
constexpr double kFringeRelativeStrength = 0.25;

} // namespace

Spectrum fft_spectrum(const Raster& image, Window window)
{
    const int w = image.values.width(), h = image.values.height();
    if (w < 64 || h < 64)
        throw Error(ErrorKind::InvalidSpec, "spectrum needs an image of at least 64x64 pixels");

    RealFft2D fft(w, h);
    for (int y = 0; y < h; ++y) {
        const double wy = window == Window::RaisedCosine ? hann(y, h) : 1.0;
        for (int x = 0; x < w; ++x) {
            const double wx = window == Window::RaisedCosine ? hann(x, w) : 1.0;
            fft.real()[static_cast<std::size_t>(y) * w + x] = image.values(x, y) * wx * wy;
        }
    }
    fft.forward();

    Spectrum s;
    s.magnitude = Array2D<double>(w, h);
    s.center_x = w / 2;
    s.center_y = h / 2;
    s.step_x = 1.0 / (w * image.pitch);
    s.step_y = 1.0 / (h * image.pitch);
    const int hw = fft.half_width();
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            // Hermitian symmetry fills the half the r2c transform omits.
            double mag;
            if (u < hw)
                mag = std::abs(fft.spec()[static_cast<std::size_t>(v) * hw + u]);
            else
                mag = std::abs(fft.spec()[static_cast<std::size_t>((h - v) % h) * hw + (w - u)]);
            const int sx = (u + s.center_x) % w;
            const int sy = (v + s.center_y) % h;
            s.magnitude(sx, sy) = mag;
        }
    }
    return s;
}

std::vector<RingInfo> find_rings(const Spectrum& s)
{
    const auto& m = s.magnitude;
    const double bin = std::max(s.step_x, s.step_y);
    const double r_max = std::min(std::min(s.center_x, m.width() - 1 - s.center_x) * s.step_x,
                                  std::min(s.center_y, m.height() - 1 - s.center_y) * s.step_y) / bin;
    const int nbins = static_cast<int>(std::floor(r_max)) + 1;
    const int lowest = static_cast<int>(std::ceil(kDcExclusionBins));
    if (nbins <= lowest + 2)
        throw Error(ErrorKind::NoRing, "spectrum too small to separate a ring from DC");

    // Radial profile: strongest bin per one-bin annulus, and where it sits.
    std::vector<double> profile(nbins, 0.0);
    std::vector<std::pair<int, int>> where(nbins, {-1, -1});
    std::vector<double> samples;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            const double r = std::hypot((x - s.center_x) * s.step_x, (y - s.center_y) * s.step_y) / bin;
            if (r < kDcExclusionBins || r > r_max)
                continue;
            const double v = m(x, y);
            samples.push_back(v);
            const int b = static_cast<int>(std::lround(r));
            if (v > profile[b]) {
                profile[b] = v;
                where[b] = {x, y};
            }
        }
    }
    if (samples.empty())
        throw Error(ErrorKind::NoRing, "spectrum carries no non-DC power");
    std::nth_element(samples.begin(), samples.begin() + samples.size() / 2, samples.end());
    const double floor = samples[samples.size() / 2];

    auto refine = [](double left, double mid, double right) {
        const double den = left - 2.0 * mid + right;
        return den < 0.0 ? 0.5 * (left - right) / den : 0.0;
    };

    // A ring is a local maximum of the radial profile that clears the noise
    // floor and stands well above the median of its radial neighbourhood.
    auto local_median = [&](int b) {
        const int half = std::max(3, static_cast<int>(0.1 * b));
        std::vector<double> near;
        for (int i = std::max(lowest, b - half); i <= std::min(nbins - 1, b + half); ++i)
            if (i != b)
                near.push_back(profile[i]);
        std::nth_element(near.begin(), near.begin() + near.size() / 2, near.end());
        return near[near.size() / 2];
    };
    std::vector<RingInfo> rings;
    for (int b = lowest; b + 1 < nbins; ++b) {
        const double p = profile[b];
        if (!(p >= profile[b - 1] && p > profile[b + 1]))
            continue;
        if (!(p > kRingSnr * floor) || !(p > kRingProminence * local_median(b)))
            continue;
        const auto [bx, by] = where[b];
        double fx = bx, fy = by;
        if (bx > 0 && bx + 1 < m.width())
            fx += refine(m(bx - 1, by), p, m(bx + 1, by));
        if (by > 0 && by + 1 < m.height())
            fy += refine(m(bx, by - 1), p, m(bx, by + 1));
        RingInfo ring;
        ring.radius = std::hypot((fx - s.center_x) * s.step_x, (fy - s.center_y) * s.step_y);
        ring.radius_bins = ring.radius / bin;
        ring.peak = p;
        ring.noise_floor = floor;
        rings.push_back(ring);
    }
    if (rings.empty())
        throw Error(ErrorKind::NoRing, "no spectral ring stands above the noise floor");
    return rings;
}

RingInfo find_dominant_ring(const Spectrum& s)
{
    const auto rings = find_rings(s);
    return *std::max_element(rings.begin(), rings.end(),
                             [](const RingInfo& a, const RingInfo& b) { return a.peak < b.peak; });
}

double lowest_fringe_frequency(const Spectrum& s)
{
    const auto rings = find_rings(s);
    double strongest = 0.0;
    for (const auto& r : rings)
        strongest = std::max(strongest, r.peak);
    for (const auto& r : rings) // sorted by radius
        if (r.peak >= kFringeRelativeStrength * strongest)
            return r.radius;
    return rings.front().radius;
}

SymmetryReport symmetry_score(const Spectrum& s, std::span<const int> orders)
{
    const RingInfo ring = find_dominant_ring(s);
    const double bin = std::max(s.step_x, s.step_y);

    // Angular power profile integrated across a radial band around the ring,
    // then smoothed over about one bin of arc so that sub-bin peak placement
    // does not change the profile.
    constexpr int kSamples = 2520;
    constexpr double kBandBins = 2.0;
    std::vector<double> profile(kSamples, 0.0);
    for (int i = 0; i < kSamples; ++i) {
        const double a = 2.0 * std::numbers::pi * i / kSamples;
        const double ca = std::cos(a), sa = std::sin(a);
        double acc = 0.0;
        for (double dr = -kBandBins; dr <= kBandBins + 1e-9; dr += 0.25) {
            const double r = ring.radius + dr * bin;
            const double v = bilinear(s.magnitude, s.center_x + r * ca / s.step_x, s.center_y + r * sa / s.step_y);
            acc += v * v;
        }
        profile[i] = acc;
    }
    const double sigma = std::max(1.0 / ring.radius_bins, 2.0 * std::numbers::pi / kSamples) * kSamples / (2.0 * std::numbers::pi);
    const int half = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * half + 1);
    for (int k = -half; k <= half; ++k)
        kernel[k + half] = std::exp(-0.5 * k * k / (sigma * sigma));
    const double ksum = std::accumulate(kernel.begin(), kernel.end(), 0.0);
    std::vector<double> smooth(kSamples, 0.0);
    for (int i = 0; i < kSamples; ++i) {
        double acc = 0.0;
        for (int k = -half; k <= half; ++k)
            acc += kernel[k + half] * profile[((i + k) % kSamples + kSamples) % kSamples];
        smooth[i] = acc / ksum;
    }

    const double mean = std::accumulate(smooth.begin(), smooth.end(), 0.0) / kSamples;
    double var = 0.0;
    for (double& v : smooth) {
        v -= mean;
        var += v * v;
    }

    SymmetryReport report;
    report.ring_radius = ring.radius;
    auto at = [&](double pos) {
        pos = std::fmod(pos, static_cast<double>(kSamples));
        if (pos < 0)
            pos += kSamples;
        const int i0 = static_cast<int>(pos);
        const double f = pos - i0;
        return (1 - f) * smooth[i0 % kSamples] + f * smooth[(i0 + 1) % kSamples];
    };
    for (int q : orders) {
        if (q < 1)
            throw Error(ErrorKind::InvalidSpec, "symmetry orders must be positive");
        double score = 1.0;
        if (var > 0.0 && q > 1) {
            const double lag = static_cast<double>(kSamples) / q;
            double c = 0.0;
            for (int i = 0; i < kSamples; ++i)
                c += smooth[i] * at(i + lag);
            score = std::clamp(c / var, 0.0, 1.0);
        }
        report.score_by_order[q] = score;
    }

    // Every divisor of a true order is also a symmetry; ties go to the larger
    // order so that a six-fold pattern reports 6 rather than 2 or 3.
    constexpr double kTieTolerance = 0.05;
    double top = -1.0;
    for (const auto& [q, sc] : report.score_by_order)
        top = std::max(top, sc);
    for (const auto& [q, sc] : report.score_by_order)
        if (sc >= top - kTieTolerance)
            report.best_order = std::max(report.best_order, q);
    return report;
}

double envelope_flatness(const Raster& image, double central_fraction, std::optional<double> fringe_frequency)
{
    if (!(central_fraction > 0.0 && central_fraction <= 1.0))
        throw Error(ErrorKind::InvalidSpec, "central_fraction must be in (0, 1]");
    const int w = image.values.width(), h = image.values.height();

    if (!fringe_frequency && w >= 64 && h >= 64) {
        try {
            fringe_frequency = lowest_fringe_frequency(fft_spectrum(image));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NoRing)
                throw;
        }
    }

    Array2D<double> env = image.values;
    if (fringe_frequency && *fringe_frequency > 0.0) {
        // Gaussian low-pass: gain exp(-2) at half the fringe frequency, e^-8 at the fringes.
        const double sigma_f = 0.25 * *fringe_frequency;
        RealFft2D fft(w, h);
        std::copy(env.flat().begin(), env.flat().end(), fft.real());
        fft.forward();
        const int hw = fft.half_width();
        const double fx_step = 1.0 / (w * image.pitch), fy_step = 1.0 / (h * image.pitch);
        for (int v = 0; v < h; ++v) {
            const double fy = (v <= h / 2 ? v : v - h) * fy_step;
            for (int u = 0; u < hw; ++u) {
                const double fx = u * fx_step;
                const double g = std::exp(-0.5 * (fx * fx + fy * fy) / (sigma_f * sigma_f));
                fft.spec()[static_cast<std::size_t>(v) * hw + u] *= g / (static_cast<double>(w) * h);
            }
        }
        fft.backward();
        std::copy(fft.real(), fft.real() + env.size(), env.flat().begin());
    }

    const double vmax = *std::max_element(env.flat().begin(), env.flat().end());
    if (!(vmax > 0.0))
        throw Error(ErrorKind::RegionNotFound, "image has no illuminated region");
    const double cut = 0.05 * vmax;
    double count = 0.0, sw = 0.0, sx = 0.0, sy = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double v = env(x, y);
            if (v > cut) {
                count += 1.0;
                sw += v;
                sx += v * x;
                sy += v * y;
            }
        }
    if (count < 4.0)
        throw Error(ErrorKind::RegionNotFound, "illuminated region too small");
    const double cx = sx / sw, cy = sy / sw;
    const double radius = std::sqrt(count / std::numbers::pi) * central_fraction; // pixels

    double n = 0.0, sum = 0.0, sum2 = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (std::hypot(x - cx, y - cy) <= radius) {
                const double v = env(x, y);
                n += 1.0;
                sum += v;
                sum2 += v * v;
            }
    if (n < 1.0)
        throw Error(ErrorKind::RegionNotFound, "central region holds no pixels");
    const double mean = sum / n;
    if (!(mean > 0.0))
        throw Error(ErrorKind::RegionNotFound, "central region is dark");
    const double var = std::max(0.0, sum2 / n - mean * mean);
    return std::sqrt(var) / mean;
}

Vec2 estimate_shift(const Raster& reference, const Raster& moved)
{
    const int w = reference.values.width(), h = reference.values.height();
    if (moved.values.width() != w || moved.values.height() != h)
        throw Error(ErrorKind::DimensionMismatch, "cross-correlation needs equally sized images");

    auto transform = [&](const Array2D<double>& img) {
        RealFft2D fft(w, h);
        const double mean = std::accumulate(img.flat().begin(), img.flat().end(), 0.0) / img.size();
        // Tapering keeps the wrap-around seam out of the correlation peak.
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                fft.real()[static_cast<std::size_t>(y) * w + x] = (img(x, y) - mean) * hann(x, w) * hann(y, h);
        fft.forward();
        const int hw = fft.half_width();
        return std::vector<std::complex<double>>(fft.spec(), fft.spec() + static_cast<std::size_t>(h) * hw);
    };
    const auto a = transform(reference.values);
    const auto b = transform(moved.values);

    RealFft2D corr(w, h);
    for (std::size_t i = 0; i < a.size(); ++i)
        corr.spec()[i] = std::conj(a[i]) * b[i];
    corr.backward();

    int bx = 0, by = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double v = corr.real()[static_cast<std::size_t>(y) * w + x];
            if (v > best) {
                best = v;
                bx = x;
                by = y;
            }
        }
    auto c = [&](int x, int y) { return corr.real()[static_cast<std::size_t>((y + h) % h) * w + (x + w) % w]; };
    auto refine = [](double l, double m, double r) {
        const double den = l - 2.0 * m + r;
        return den < 0.0 ? 0.5 * (l - r) / den : 0.0;
    };
    double dx = bx + refine(c(bx - 1, by), best, c(bx + 1, by));
    double dy = by + refine(c(bx, by - 1), best, c(bx, by + 1));
    if (dx > 0.5 * w)
        dx -= w;
    if (dy > 0.5 * h)
        dy -= h;
    return {dx * reference.pitch, dy * reference.pitch};
}

} // namespace prismlattice
