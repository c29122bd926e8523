// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "oracles.hpp"

#include "commands.hpp"
#include "config.hpp"

#include "prismlattice/analysis.hpp"
#include "prismlattice/field.hpp"
#include "prismlattice/projection.hpp"
#include "prismlattice/stability.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

using namespace prismlattice;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = PRISMLATTICE_TEST_SOURCE_DIR;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        pass = pass && ok;
        if (!detail.empty())
            detail += "; ";
        detail += what + (ok ? "" : " [failed]");
    }
};

std::string fmt(const char* f, double v)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch(const std::string& tag)
{
    const auto p = fs::temp_directory_path() / ("prismlattice_acceptance_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

cli::RunConfig config(const char* name) { return cli::resolve_config(cli::load_config(kSource / "configs" / name), kSource / "configs"); }

PrismSpec fused_silica(int n)
{
    PrismSpec p;
    p.facet_count = n;
    p.apex_angle = deg_to_rad(3.0);
    p.refractive_index = 1.46;
    return p;
}

Outcome geometry()
{
    Outcome o;
    const double deg = rad_to_deg(deflection_angle(fused_silica(3)));
    o.require(std::abs(deg - 1.38) <= 1e-12 * 1.38, "theta = " + fmt("%.15g deg", deg));
    o.require(std::round(deg * 10) / 10 == 1.4, "rounds to 1.4 deg");
    return o;
}

Outcome triangular_constant()
{
    Outcome o;
    const auto dir = scratch("c2");
    cli::CommandOptions opts;
    opts.out_dir = dir / "sim";
    const auto t0 = std::chrono::steady_clock::now();
    cli::run_simulate(config("triangular_n3.ini"), opts);
    cli::CommandOptions an;
    an.out_dir = dir / "analyze";
    an.image = opts.out_dir / "field.pgm";
    const auto report = cli::run_analyze(cli::RunConfig{}, an);
    const double elapsed = seconds_since(t0);
    const double a = report["spacing"]["mean_m"].get<double>();
    o.require(std::abs(a / 14.7e-6 - 1) <= 0.005, "spacing " + fmt("%.4f um", a * 1e6) + " vs 14.7 um");
    o.require(elapsed < 10.0, "1024^2 simulate + analyze " + fmt("%.2f s", elapsed));
    fs::remove_all(dir);
    return o;
}

Outcome closed_form_vs_search()
{
    Outcome o;
    BeamSpec beam;
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        const double theta = deg_to_rad(0.5 + 0.5 * i);
        const double closed = *predicted_lattice_constant(make_geometry(3, theta, beam));
        const double brute = oracle::brute_force_spacing(3, theta, beam.wavelength);
        worst = std::max(worst, std::abs(closed / brute - 1));
    }
    o.require(worst <= 0.005, "10 angles in [0.5, 5] deg, worst deviation " + fmt("%.2e", worst));
    return o;
}

Outcome symmetry()
{
    Outcome o;
    BeamSpec beam;
    const double theta = deg_to_rad(1.38);
    const auto grid = GridSpec::centered(1024, 1024, 0.5e-6);
    for (auto [n, want] : {std::pair{3, 6}, std::pair{5, 10}}) {
        const auto field = plane_wave_intensity(make_geometry(n, theta, beam), {}, grid);
        const auto clean = symmetry_score(fft_spectrum(to_raster(field)));
        const double s_clean = clean.score_by_order.at(clean.best_order);

        CameraSpec cam;
        cam.pixel_size = 1e-6;
        cam.bit_depth = 12;
        cam.exposure_gain = 1.0 / n;
        cam.read_noise_sigma = 0.01 * cam.max_count();
        cam.seed = 21;
        const auto noisy = symmetry_score(fft_spectrum(to_raster(render_frame(field, cam, 0.0))));
        const double s_noisy = noisy.score_by_order.at(noisy.best_order);

        const std::string tag = "n=" + std::to_string(n);
        o.require(clean.best_order == want && s_clean >= 0.9,
                  tag + " order " + std::to_string(clean.best_order) + fmt(" score %.3f", s_clean));
        o.require(noisy.best_order == want && s_noisy >= 0.7,
                  tag + " with 1% read noise order " + std::to_string(noisy.best_order) + fmt(" score %.3f", s_noisy));
    }
    return o;
}

Outcome projection()
{
    Outcome o;
    auto shown = [](double v, int digits) { return std::round(v * std::pow(10.0, digits)) / std::pow(10.0, digits); };
    TelescopeSpec project, view;
    project.f_obj1 = 75e-3;
    project.f_obj2 = 4e-3;
    view.f_obj1 = 250e-3;
    view.f_obj2 = 3.6e-3;
    const double m1 = demagnification(project), m2 = demagnification(view);
    const double a = project_constant(14.9, m1, ProjectionDirection::Demagnify);
    const double b = project_constant(23.0, m1, ProjectionDirection::Demagnify);
    const double c = project_constant(55.7, m2, ProjectionDirection::Demagnify);
    o.require(m1 == 18.75, "factor 18.75");
    o.require(shown(a, 3) == 0.795, fmt("14.9/18.75 = %.5f um", a));
    o.require(shown(b, 2) == 1.23, fmt("23.0/18.75 = %.5f um", b));
    o.require(shown(c, 3) == 0.802, "55.7/" + fmt("%.4f", m2) + fmt(" = %.5f um", c));
    return o;
}

Outcome stability()
{
    Outcome o;
    const auto dir = scratch("c6");
    cli::CommandOptions opts;
    opts.out_dir = dir / "zero";
    const auto zero = cli::run_stability(config("stability_zero_noise.ini"), opts);
    o.require(zero["spacing_rmse_relative"].get<double>() < 1e-3,
              "zero noise rel RMSE " + fmt("%.2e", zero["spacing_rmse_relative"].get<double>()));
    o.require(zero["position_drift_max_m"].get<double>() == 0.0,
              "zero noise drift " + fmt("%.2e m", zero["position_drift_max_m"].get<double>()));

    opts.out_dir = dir / "demo";
    const auto t0 = std::chrono::steady_clock::now();
    const auto demo = cli::run_stability(config("stability_demo.ini"), opts);
    const double elapsed = seconds_since(t0);
    const double rmse = demo["spacing_rmse_relative"].get<double>();
    const double drift = demo["position_drift_relative"].get<double>();
    o.require(rmse <= 0.0114, fmt("demo rel RMSE %.4f%%", 100 * rmse));
    o.require(drift <= 0.0161, fmt("demo drift %.3f%%", 100 * drift));
    o.require(demo["within_reference_envelope"].get<bool>(), "flagged within envelope");
    o.require(demo["frame_count"].get<int>() == 200 && elapsed < 60.0,
              std::to_string(demo["frame_count"].get<int>()) + fmt(" frames in %.1f s", elapsed));
    fs::remove_all(dir);
    return o;
}

Outcome flat_top()
{
    Outcome o;
    const auto c = config("flat_top_n3.ini");
    const auto& beam = *c.beam;
    const auto& grid = *c.grid;
    const double gauss = envelope_flatness(to_raster(sector_envelope_field(make_geometry(3, 0.0, beam), {}, grid, beam, 1.0)), 0.5);
    for (int n : {2, 3}) {
        auto prism = *c.prism;
        prism.facet_count = n;
        const auto g = beam_wavevectors(prism, beam);
        const double split = envelope_flatness(to_raster(sector_envelope_field(g, {}, grid, beam, g.overlap_distance)), 0.5);
        o.require(split < gauss, "n=" + std::to_string(n) + fmt(" flatness %.4f", split) + fmt(" vs Gaussian %.4f", gauss));
    }
    return o;
}

Outcome depth()
{
    Outcome o;
    const auto dir = scratch("c8");
    cli::CommandOptions opts;
    opts.out_dir = dir;
    const auto r = cli::run_project(config("project_li6.ini"), opts);
    const auto& pv = r["depth"]["peak_to_valley"];
    const double photon = pv["depth_photon_er"].get<double>();
    const double lattice = pv["depth_lattice_er"].get<double>();
    o.require(photon >= 20.0 / 3 && photon <= 60.0, fmt("%.2f photon-recoil Er vs 20 Er (factor 3)", photon));
    o.detail += fmt("; lattice-constant recoil convention gives %.1f Er", lattice);
    fs::remove_all(dir);
    return o;
}

Outcome properties()
{
    Outcome o;
    BeamSpec beam;
    const double theta = deg_to_rad(1.38);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> phase(-oracle::pi, oracle::pi), pos(-150e-6, 150e-6);

    double pair_err = 0.0, rot_err = 0.0, mean_err = 0.0;
    bool bounds = true, common = true;
    for (int n = 2; n <= 12; ++n) {
        const auto g = make_geometry(n, theta, beam);
        PhaseVector ph;
        for (int j = 0; j < n; ++j)
            ph.values.push_back(phase(rng));
        for (int i = 0; i < 300; ++i) {
            const double x = pos(rng), y = pos(rng);
            const double v = plane_wave_intensity_at(g, ph, x, y);
            pair_err = std::max(pair_err, std::abs(v - oracle::pairwise_cosine(n, theta, beam.wavelength, 1.0, ph.values, x, y)) / n);
            bounds = bounds && v >= 0.0 && v <= n * (1 + 1e-12);
            const double r = 2 * oracle::pi / n;
            const double a = plane_wave_intensity_at(g, {}, x, y);
            const double b = plane_wave_intensity_at(g, {}, x * std::cos(r) - y * std::sin(r), x * std::sin(r) + y * std::cos(r));
            rot_err = std::max(rot_err, std::abs(a - b) / n);
        }
        PhaseVector base, shifted;
        for (int j = 0; j < n; ++j) {
            base.values.push_back(0.125 * j);
            shifted.values.push_back(0.125 * j + 2.0);
        }
        const auto grid = GridSpec::centered(64, 64, 1e-6);
        common = common && plane_wave_intensity(g, base, grid).values == plane_wave_intensity(g, shifted, grid).values;

        const double period = beam.wavelength / std::sin(theta);
        const int px = static_cast<int>(std::ceil(24 * period / 1e-6));
        const auto f = plane_wave_intensity(g, ph, GridSpec::centered(px, px, 1e-6));
        double sum = 0.0;
        for (double v : f.values.flat())
            sum += v;
        mean_err = std::max(mean_err, std::abs(sum / f.values.size() - 1.0));
    }
    o.require(pair_err <= 1e-10, fmt("pairwise vs coherent %.1e", pair_err));
    o.require(common, "common phase bit-exact");
    o.require(rot_err <= 1e-6, fmt("n-fold rotation %.1e", rot_err));
    o.require(mean_err <= 0.01, fmt("spatial mean %.2e", mean_err));
    o.require(bounds, "bounds [0, n|E0|^2]");

    NoiseModel noise;
    noise.phase_jitter_sigma = 0.05;
    noise.intensity_rms = 0.02;
    noise.seed = 5;
    SeriesConfig sc;
    sc.frame_count = 3;
    sc.grid = GridSpec::centered(128, 128, 0.5e-6);
    sc.camera.pixel_size = 1e-6;
    sc.camera.exposure_gain = 0.3;
    sc.camera.read_noise_sigma = 8;
    sc.camera.seed = 6;
    const auto g3 = make_geometry(3, theta, beam);
    const auto s1 = generate_time_series(g3, beam, noise, sc);
    const auto s2 = generate_time_series(g3, beam, noise, sc);
    bool same = true;
    for (std::size_t i = 0; i < s1.size(); ++i)
        same = same && s1[i].image == s2[i].image;
    o.require(same, "fixed-seed determinism bit-exact");

    std::normal_distribution<double> gn(0.0, 0.01);
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);
    int covered = 0;
    for (int t = 0; t < 500; ++t) {
        const double cx = 16 + jitter(rng), cy = 16 + jitter(rng);
        Raster img{Array2D<double>(33, 33), 1e-6, {}};
        for (int y = 0; y < 33; ++y)
            for (int x = 0; x < 33; ++x)
                img.values(x, y) = 0.1 + std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / 8.0) + gn(rng);
        const auto fit = fit_peak_gaussian(img, {16, 16, 0.0}, 6);
        if (std::hypot(fit.center_px.x - cx, fit.center_px.y - cy) * img.pitch <= fit.ci95_center)
            ++covered;
    }
    o.require(covered >= 465, "CI coverage " + std::to_string(covered) + "/500");
    return o;
}

} // namespace

int main()
{
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"geometry", geometry},
        {"triangular lattice constant", triangular_constant},
        {"closed form vs brute force", closed_form_vs_search},
        {"rotational symmetry", symmetry},
        {"projection arithmetic", projection},
        {"stability metrics", stability},
        {"flat-top envelope", flat_top},
        {"depth order of magnitude", depth},
        {"property suites", properties},
    };
    int failures = 0;
    int index = 0;
    for (const auto& [name, run] : criteria) {
        ++index;
        Outcome out;
        try {
            out = run();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("threw: ") + e.what();
        }
        failures += out.pass ? 0 : 1;
        std::printf("%s %d %s: %s\n", out.pass ? "PASS" : "FAIL", index, name, out.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%d criteria passed\n", index - failures, index);
    return failures ? 1 : 0;
}
