#include "doctest.h"
#include "oracles.hpp"

#include "prismlattice/error.hpp"
#include "prismlattice/optics.hpp"

#include <cmath>

using namespace prismlattice;

namespace {

PrismSpec prism(int n, double alpha_deg = 3.0, double mu = 1.46)
{
    PrismSpec p;
    p.facet_count = n;
    p.apex_angle = deg_to_rad(alpha_deg);
    p.refractive_index = mu;
    return p;
}

} // namespace

TEST_CASE("deflection angle of the 3 degree fused silica prism")
{
    CHECK(rad_to_deg(deflection_angle(prism(3))) == doctest::Approx(1.38).epsilon(1e-12));
    CHECK(rad_to_deg(deflection_angle(prism(3, 2.0, 1.5))) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("deflection vanishes as the index approaches one")
{
    double previous = deflection_angle(prism(3, 3.0, 1.1));
    for (double eps : {1e-2, 1e-4, 1e-8}) {
        const double theta = deflection_angle(prism(3, 3.0, 1.0 + eps));
        CHECK(theta < previous);
        CHECK(theta == doctest::Approx(eps * deg_to_rad(3.0)).epsilon(1e-6));
        previous = theta;
    }
}

TEST_CASE("deflection is linear in apex angle")
{
    for (double a : {0.5, 1.0, 3.0, 7.5})
        CHECK(deflection_angle(prism(4, 2 * a)) == 2 * deflection_angle(prism(4, a)));
}

TEST_CASE("prism validation")
{
    CHECK_THROWS_AS(deflection_angle(prism(1)), Error);
    CHECK_THROWS_AS(deflection_angle(prism(13)), Error);
    CHECK_THROWS_AS(deflection_angle(prism(3, 0.0)), Error);
    CHECK_THROWS_AS(deflection_angle(prism(3, 90.0)), Error);
    CHECK_THROWS_AS(deflection_angle(prism(3, 3.0, 1.0)), Error);
    try {
        deflection_angle(prism(1));
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidSpec);
    }
}

TEST_CASE("overlap distance")
{
    BeamSpec beam;
    beam.waist = 1.8e-3;
    // Reference: 1.8e-3 / tan(1.38 deg), evaluated at 30 digits.
    CHECK(overlap_distance(beam, deg_to_rad(1.38)) == doctest::Approx(0.0747191735667152).epsilon(1e-12));
    beam.waist = 1e-3;
    CHECK(overlap_distance(beam, oracle::pi / 4) == doctest::Approx(1e-3).epsilon(1e-12));
    try {
        overlap_distance(beam, 0.0);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateGeometry);
    }
    CHECK_THROWS_AS(overlap_distance(beam, -0.01), Error);
}

TEST_CASE("wavevector construction")
{
    BeamSpec beam;
    SUBCASE("n = 3 azimuths")
    {
        const auto g = beam_wavevectors(prism(3), beam);
        REQUIRE(g.facet_azimuths.size() == 3);
        CHECK(g.facet_azimuths[0] == 0.0);
        CHECK(rad_to_deg(g.facet_azimuths[1]) == doctest::Approx(120.0).epsilon(1e-14));
        CHECK(rad_to_deg(g.facet_azimuths[2]) == doctest::Approx(240.0).epsilon(1e-14));
        CHECK(g.transverse_wavenumber == doctest::Approx(g.wavenumber * std::sin(g.deflection_angle)).epsilon(1e-15));
    }
    SUBCASE("n = 2 transverse parts are antiparallel")
    {
        const auto g = beam_wavevectors(prism(2), beam);
        CHECK(g.wavevectors[0].x == doctest::Approx(-g.wavevectors[1].x).epsilon(1e-14));
        CHECK(std::abs(g.wavevectors[0].y + g.wavevectors[1].y) < 1e-12 * g.transverse_wavenumber);
    }
    SUBCASE("equal magnitudes and tilt for every facet count")
    {
        for (int n = 2; n <= kMaxFacetCount; ++n) {
            const auto g = beam_wavevectors(prism(n), beam);
            double sx = 0.0, sy = 0.0;
            for (const auto& k : g.wavevectors) {
                CHECK(std::abs(norm(k) - 2 * oracle::pi / 532e-9) <= 1e-12 * norm(k));
                CHECK(std::abs(std::acos(k.z / norm(k)) - g.deflection_angle) < 1e-12);
                sx += k.x / g.transverse_wavenumber;
                sy += k.y / g.transverse_wavenumber;
            }
            CHECK(std::hypot(sx, sy) < 1e-12);
            CHECK(g.overlap_distance > 0.0);
        }
    }
}

TEST_CASE("closed-form lattice constants")
{
    BeamSpec beam;
    const auto g3 = beam_wavevectors(prism(3), beam);
    // 2 lambda / (3 sin theta) at 30 digits.
    CHECK(*predicted_lattice_constant(g3) == doctest::Approx(1.47267159456794e-05).epsilon(1e-12));
    CHECK(*predicted_lattice_constant(g3) * 1e6 == doctest::Approx(14.7).epsilon(0.002));

    const auto g4 = beam_wavevectors(prism(4), beam);
    CHECK(*predicted_lattice_constant(g4) == doctest::Approx(1.56200410646969e-05).epsilon(1e-12));

    for (int n : {2, 5, 6, 12})
        CHECK_FALSE(predicted_lattice_constant(beam_wavevectors(prism(n), beam)).has_value());

    SUBCASE("halves when theta doubles (small angles)")
    {
        const double a1 = *predicted_lattice_constant(make_geometry(3, deg_to_rad(0.5), beam));
        const double a2 = *predicted_lattice_constant(make_geometry(3, deg_to_rad(1.0), beam));
        CHECK(a2 == doctest::Approx(a1 / 2).epsilon(1e-3));
    }
}

TEST_CASE("closed form agrees with a brute-force peak search")
{
    BeamSpec beam;
    SUBCASE("n = 4")
    {
        const double theta = deg_to_rad(1.38);
        const double brute = oracle::brute_force_spacing(4, theta, beam.wavelength);
        CHECK(*predicted_lattice_constant(make_geometry(4, theta, beam)) == doctest::Approx(brute).epsilon(0.005));
    }
    SUBCASE("n = 3 across theta in [0.5, 5] degrees")
    {
        for (double deg : {0.5, 1.0, 2.5, 5.0}) {
            const double theta = deg_to_rad(deg);
            const double brute = oracle::brute_force_spacing(3, theta, beam.wavelength);
            CHECK(*predicted_lattice_constant(make_geometry(3, theta, beam)) == doctest::Approx(brute).epsilon(0.005));
        }
    }
}

TEST_CASE("facet angle errors perturb individual beams")
{
    BeamSpec beam;
    auto p = prism(3);
    p.facet_angle_error = {0.0, 1e-4, 0.0};
    const auto g = beam_wavevectors(p, beam);
    const auto ideal = beam_wavevectors(prism(3), beam);
    CHECK(g.wavevectors[0].x == ideal.wavevectors[0].x);
    CHECK(std::hypot(g.wavevectors[1].x, g.wavevectors[1].y) >
          std::hypot(ideal.wavevectors[1].x, ideal.wavevectors[1].y));
    p.facet_angle_error = {0.0, 1e-4};
    CHECK_THROWS_AS(beam_wavevectors(p, beam), Error);
}
