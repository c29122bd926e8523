#include "doctest.h"
#include "oracles.hpp"

#include "prismlattice/analysis.hpp"
#include "prismlattice/error.hpp"
#include "prismlattice/field.hpp"

#include <cmath>
#include <random>

using namespace prismlattice;

namespace {

const double kTheta = deg_to_rad(1.38);

DeflectionGeometry geometry(int n, double theta = kTheta, double e0 = 1.0)
{
    BeamSpec beam;
    beam.amplitude = e0;
    return make_geometry(n, theta, beam);
}

PhaseVector random_phases(int n, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-oracle::pi, oracle::pi);
    PhaseVector p;
    for (int j = 0; j < n; ++j)
        p.values.push_back(u(rng));
    return p;
}

} // namespace

TEST_CASE("origin intensity equals n |E0|^2 with equal phases")
{
    for (int n = 2; n <= 12; ++n) {
        const auto g = geometry(n, kTheta, 1.7);
        CHECK(plane_wave_intensity_at(g, {}, 0.0, 0.0) == doctest::Approx(n * 1.7 * 1.7).epsilon(1e-14));
    }
}

TEST_CASE("coherent sum matches the pairwise cosine expansion")
{
    std::mt19937_64 rng(11);
    for (int n = 2; n <= 12; ++n) {
        const double e0 = 0.5 + 0.1 * n;
        const auto g = geometry(n, kTheta, e0);
        const auto phases = random_phases(n, rng);
        const auto grid = GridSpec::centered(48, 40, 0.7e-6);
        const auto field = plane_wave_intensity(g, phases, grid);
        double worst = 0.0;
        for (int r = 0; r < grid.height; ++r)
            for (int c = 0; c < grid.width; ++c) {
                const double ref =
                    oracle::pairwise_cosine(n, kTheta, g.wavelength, e0, phases.values, grid.x(c), grid.y(r));
                worst = std::max(worst, std::abs(field.values(c, r) - ref));
                worst = std::max(worst, std::abs(plane_wave_intensity_at(g, phases, grid.x(c), grid.y(r)) - ref));
            }
        CHECK(worst <= 1e-10 * n * e0 * e0);
    }
}

TEST_CASE("common phase offset leaves the field bit-identical")
{
    // Offsets and phases are dyadic, so every phase difference is exact.
    for (int n : {2, 3, 5, 8}) {
        const auto g = geometry(n);
        PhaseVector base, shifted;
        for (int j = 0; j < n; ++j) {
            base.values.push_back(0.25 * j - 0.5);
            shifted.values.push_back(base.values.back() + 1.5);
        }
        const auto grid = GridSpec::centered(64, 64, 1e-6);
        CHECK(plane_wave_intensity(g, base, grid).values == plane_wave_intensity(g, shifted, grid).values);
    }
}

TEST_CASE("n-fold rotational symmetry")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-200e-6, 200e-6);
    for (int n = 2; n <= 12; ++n) {
        const auto g = geometry(n);
        const double rot = 2 * oracle::pi / n;
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            const double x = u(rng), y = u(rng);
            const double xr = x * std::cos(rot) - y * std::sin(rot);
            const double yr = x * std::sin(rot) + y * std::cos(rot);
            const double a = plane_wave_intensity_at(g, {}, x, y);
            const double b = plane_wave_intensity_at(g, {}, xr, yr);
            worst = std::max(worst, std::abs(a - b) / n);
        }
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("spatial mean over many periods equals |E0|^2")
{
    std::mt19937_64 rng(8);
    for (int n : {2, 3, 4, 5, 7}) {
        const auto g = geometry(n);
        const double period = g.wavelength / std::sin(kTheta);
        const int px = static_cast<int>(std::ceil(24 * period / 0.5e-6));
        const auto field = plane_wave_intensity(g, random_phases(n, rng), GridSpec::centered(px, px, 0.5e-6));
        double sum = 0.0;
        for (double v : field.values.flat())
            sum += v;
        CHECK(sum / field.values.flat().size() == doctest::Approx(1.0).epsilon(0.01));
    }
}

TEST_CASE("intensity stays within [0, n |E0|^2]")
{
    std::mt19937_64 rng(3);
    for (int n = 2; n <= 12; ++n) {
        const auto field = plane_wave_intensity(geometry(n, kTheta, 2.0), random_phases(n, rng), GridSpec::centered(96, 96, 1e-6));
        for (double v : field.values.flat()) {
            CHECK(v >= 0.0);
            CHECK(v <= n * 4.0 * (1 + 1e-12));
        }
    }
}

TEST_CASE("two-beam phase step translates the fringes")
{
    const auto g = geometry(2);
    const double dk = std::hypot(g.wavevectors[0].x - g.wavevectors[1].x, g.wavevectors[0].y - g.wavevectors[1].y);
    const auto grid = GridSpec::centered(256, 256, 0.5e-6);
    const auto ref = to_raster(plane_wave_intensity(g, PhaseVector{{0.0, 0.0}}, grid));
    for (double c : {0.4, 1.0, -1.3}) {
        const auto moved = to_raster(plane_wave_intensity(g, PhaseVector{{0.0, c}}, grid));
        const Vec2 s = estimate_shift(ref, moved);
        // The difference wavevector k0 - k1 points along -x for this geometry.
        const double expected = c / dk * ((g.wavevectors[0].x - g.wavevectors[1].x) / dk);
        CHECK(std::abs(s.x - expected) / grid.pitch < 0.1);
        CHECK(std::abs(s.y) / grid.pitch < 0.1);
    }
}

TEST_CASE("phase length must match the facet count")
{
    const auto g = geometry(3);
    try {
        plane_wave_intensity(g, PhaseVector{{0.0, 1.0}}, GridSpec::centered(32, 32, 1e-6));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DimensionMismatch);
    }
}

TEST_CASE("grid validation")
{
    CHECK_THROWS_AS(plane_wave_intensity(geometry(3), {}, GridSpec::centered(8, 64, 1e-6)), Error);
    CHECK_THROWS_AS(plane_wave_intensity(geometry(3), {}, GridSpec::centered(64, 64, 0.0)), Error);
}

TEST_CASE("sector ownership")
{
    CHECK(sector_index(1.0, 0.0, 3) == 0);
    CHECK(sector_index(-1.0, 0.1, 2) == 1);
    CHECK(sector_index(std::cos(2.1), std::sin(2.1), 3) == 1);
    // Boundaries belong to the lower-index facet.
    CHECK(sector_index(0.0, 1.0, 2) == 0);
    CHECK(sector_index(0.0, -1.0, 2) == 0);
    CHECK(sector_index(std::cos(oracle::pi / 4), std::sin(oracle::pi / 4), 4) == 0);
    CHECK(sector_index(std::cos(3 * oracle::pi / 4), std::sin(3 * oracle::pi / 4), 4) == 1);
}

TEST_CASE("sector envelope without deflection is the input Gaussian")
{
    BeamSpec beam;
    beam.waist = 1.8e-3;
    beam.amplitude = 1.3;
    for (int n : {2, 3, 5}) {
        const auto g = make_geometry(n, 0.0, beam);
        const auto grid = GridSpec::centered(64, 64, 100e-6);
        const auto field = sector_envelope_field(g, {}, grid, beam, 0.1);
        double worst = 0.0;
        for (int r = 0; r < grid.height; ++r)
            for (int c = 0; c < grid.width; ++c) {
                const double x = grid.x(c), y = grid.y(r);
                const double ref = 1.69 * std::exp(-2 * (x * x + y * y) / (beam.waist * beam.waist));
                worst = std::max(worst, std::abs(field.values(c, r) - ref) / ref);
            }
        CHECK(worst <= 1e-10);
    }
}

TEST_CASE("sector envelope fringes match the plane-wave lattice")
{
    BeamSpec beam;
    beam.waist = 1.8e-3;
    const auto g = make_geometry(3, kTheta, beam);
    const auto grid = GridSpec::centered(512, 512, 1e-6);
    AnalysisOptions opts;
    opts.symmetry = false;
    opts.flatness = false;
    const auto sector = analyze_lattice(to_raster(sector_envelope_field(g, {}, grid, beam, g.overlap_distance)), opts);
    const auto plane = analyze_lattice(to_raster(plane_wave_intensity(g, {}, grid)), opts);
    CHECK(sector.spacing.mean_spacing == doctest::Approx(plane.spacing.mean_spacing).epsilon(0.01));
}

TEST_CASE("sector envelope rejects separated sectors")
{
    BeamSpec beam;
    beam.waist = 1.8e-3;
    const auto g = make_geometry(3, kTheta, beam);
    const auto grid = GridSpec::centered(32, 32, 100e-6);
    try {
        sector_envelope_field(g, {}, grid, beam, 3.01 * beam.waist / std::tan(kTheta));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateGeometry);
    }
    CHECK_NOTHROW(sector_envelope_field(g, {}, grid, beam, 2.99 * beam.waist / std::tan(kTheta)));
    CHECK_THROWS_AS(sector_envelope_field(g, {}, grid, beam, 0.0), Error);
}

TEST_CASE("camera rendering")
{
    const auto grid = GridSpec::centered(64, 64, 1e-6);
    IntensityField field{grid, Array2D<double>(64, 64)};
    CameraSpec cam;
    cam.pixel_size = 2e-6;

    SUBCASE("zero field")
    {
        const auto f = render_frame(field, cam, 0.0);
        CHECK(f.image.width() == 32);
        for (auto v : f.image.flat())
            CHECK(v == 0);
    }
    SUBCASE("uniform field at half-scale gain")
    {
        field.values.fill(1.0);
        cam.exposure_gain = 0.5;
        for (int bits : {8, 12, 16}) {
            cam.bit_depth = bits;
            const auto f = render_frame(field, cam, 0.0);
            for (auto v : f.image.flat())
                CHECK(v == (1u << (bits - 1)));
        }
    }
    SUBCASE("area averaging over 2x2 blocks")
    {
        for (int r = 0; r < 64; ++r)
            for (int c = 0; c < 64; ++c)
                field.values(c, r) = (c % 2) * 0.5;
        cam.exposure_gain = 1.0;
        cam.bit_depth = 12;
        const auto f = render_frame(field, cam, 0.0);
        for (auto v : f.image.flat())
            CHECK(v == 1024);
    }
    SUBCASE("clamping at full scale")
    {
        field.values.fill(3.0);
        cam.exposure_gain = 1.0;
        const auto f = render_frame(field, cam, 0.0);
        for (auto v : f.image.flat())
            CHECK(v == cam.max_count());
    }
    SUBCASE("determinism under a fixed seed")
    {
        field.values.fill(0.3);
        cam.read_noise_sigma = 20.0;
        cam.seed = 99;
        const auto a = render_frame(field, cam, 1.0);
        const auto b = render_frame(field, cam, 1.0);
        CHECK(a.image == b.image);
        cam.seed = 100;
        CHECK_FALSE(render_frame(field, cam, 1.0).image == a.image);
    }
    SUBCASE("camera finer than the grid")
    {
        cam.pixel_size = 0.5e-6;
        try {
            render_frame(field, cam, 0.0);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Resolution);
        }
    }
    SUBCASE("bit depth bounds")
    {
        cam.bit_depth = 7;
        CHECK_THROWS_AS(render_frame(field, cam, 0.0), Error);
        cam.bit_depth = 17;
        CHECK_THROWS_AS(render_frame(field, cam, 0.0), Error);
    }
}
