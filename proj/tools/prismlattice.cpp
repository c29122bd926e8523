#include "commands.hpp"

#include "prismlattice/error.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace prismlattice;
using namespace prismlattice::cli;

namespace {

struct Common {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::string format = "text";
};

void add_common(CLI::App* sub, Common& c, bool config_required)
{
    auto* opt = sub->add_option("--config", c.config, "run configuration file");
    if (config_required)
        opt->required();
    opt->check(CLI::ExistingFile);
    sub->add_option("--out", c.out, "output directory")->capture_default_str();
    sub->add_option("--seed", c.seed, "override the [run] seed");
    sub->add_option("--format", c.format, "report format")
        ->check(CLI::IsMember({"text", "structured"}))
        ->capture_default_str();
}

RunConfig load(const Common& c)
{
    if (c.config.empty())
        return {};
    const std::filesystem::path path(c.config);
    return resolve_config(load_config(path), path.parent_path());
}

CommandOptions options_from(const Common& c)
{
    CommandOptions o;
    o.out_dir = c.out;
    o.seed = c.seed;
    o.format = c.format == "structured" ? OutputFormat::Structured : OutputFormat::Text;
    return o;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-facet prism optical lattice simulator and analysis toolkit"};
    app.require_subcommand(1);

    Common sim, ana, stab, proj, swp;
    auto* simulate = app.add_subcommand("simulate", "synthesize an interference field (and camera frame)");
    add_common(simulate, sim, true);

    auto* analyze = app.add_subcommand("analyze", "peak, spacing, symmetry and flatness analysis of an image");
    add_common(analyze, ana, false);
    std::string image;
    std::optional<double> pitch_um;
    analyze->add_option("image", image, "16-bit or 8-bit PGM image");
    analyze->add_option("--pitch-um", pitch_um, "pixel pitch in micrometres when the image has no sidecar")
        ->check(CLI::PositiveNumber);

    auto* stability = app.add_subcommand("stability", "noisy frame series and stability metrics");
    add_common(stability, stab, true);

    auto* project = app.add_subcommand("project", "telescope projection and lattice depth");
    add_common(project, proj, true);
    std::optional<double> spacing_um;
    project->add_option("--spacing-um", spacing_um, "measured lattice spacing in micrometres")
        ->check(CLI::PositiveNumber);

    auto* sweep = app.add_subcommand("sweep", "parameter grid over apex angle, facet count and wavelength");
    add_common(sweep, swp, true);

    CLI11_PARSE(app, argc, argv);

    const Common* common = simulate->parsed() ? &sim
                           : analyze->parsed()   ? &ana
                           : stability->parsed() ? &stab
                           : project->parsed()   ? &proj
                                                 : &swp;
    try {
        RunConfig config = load(*common);
        CommandOptions options = options_from(*common);
        Report report;
        if (simulate->parsed()) {
            report = run_simulate(std::move(config), options);
        } else if (analyze->parsed()) {
            if (!image.empty())
                options.image = image;
            if (pitch_um)
                options.pitch = *pitch_um * 1e-6;
            report = run_analyze(std::move(config), options);
        } else if (stability->parsed()) {
            report = run_stability(std::move(config), options);
        } else if (project->parsed()) {
            if (spacing_um)
                options.measured_spacing = *spacing_um * 1e-6;
            report = run_project(std::move(config), options);
        } else {
            report = run_sweep(std::move(config), options);
        }
        if (options.format == OutputFormat::Structured)
            std::cout << report.dump(2) << '\n';
        else
            std::cout << render_text(report);
        if (report.contains("failed_points") && report["failed_points"].get<int>() > 0) {
            std::cerr << "error: " << report["failed_points"].get<int>() << " sweep point(s) failed\n";
            return 1;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
