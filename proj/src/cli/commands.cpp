#include "commands.hpp"

#include "prismlattice/error.hpp"
#include "prismlattice/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace prismlattice::cli {

namespace fs = std::filesystem;

namespace {

void write_text_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
    out << text;
    if (!out)
        throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

void prepare(RunConfig& config, const CommandOptions& options)
{
    if (options.seed)
        config.seed = *options.seed;
    fs::create_directories(options.out_dir);
}

void finish(const Report& report, const RunConfig& config, const std::string& command, const CommandOptions& options)
{
    write_text_file(options.out_dir / "manifest.ini", format_manifest(config, command));
    if (options.format == OutputFormat::Structured)
        write_text_file(options.out_dir / "report.json", report.dump(2) + "\n");
    else
        write_text_file(options.out_dir / "report.txt", render_text(report));
}

// NaN and infinity have no JSON spelling; they become null.
Report num(double v)
{
    return std::isfinite(v) ? Report(v) : Report(nullptr);
}

std::string tsv(double v)
{
    if (!std::isfinite(v))
        return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

Report geometry_report(const PrismSpec& prism, const DeflectionGeometry& g)
{
    Report r;
    r["facet_count"] = prism.facet_count;
    r["apex_angle_deg"] = rad_to_deg(prism.apex_angle);
    r["refractive_index"] = prism.refractive_index;
    r["deflection_angle_rad"] = g.deflection_angle;
    r["deflection_angle_deg"] = rad_to_deg(g.deflection_angle);
    r["wavelength_m"] = g.wavelength;
    r["transverse_wavenumber_per_m"] = g.transverse_wavenumber;
    r["overlap_distance_m"] = num(g.overlap_distance);
    const auto a = predicted_lattice_constant(g);
    r["predicted_lattice_constant_m"] = a ? Report(*a) : Report(nullptr);
    if (!a)
        r["predicted_lattice_constant_note"] = "no closed form for this facet count";
    return r;
}

PhaseVector phases_for(const RunConfig& config, int n)
{
    PhaseVector p;
    if (config.field && !config.field->phases.values.empty())
        p = config.field->phases;
    else
        p.values.assign(n, 0.0);
    return p;
}

IntensityField synthesize(const RunConfig& config, const DeflectionGeometry& g, const BeamSpec& beam, const GridSpec& grid)
{
    const PhaseVector phases = phases_for(config, g.facet_count());
    if (config.field && config.field->model == FieldModel::SectorEnvelope)
        return sector_envelope_field(g, phases, grid, beam, config.field->z.value_or(g.overlap_distance));
    return plane_wave_intensity(g, phases, grid);
}

Report spacing_report(const SpacingEstimate& s)
{
    Report r;
    r["mean_m"] = s.mean_spacing;
    r["sample_count"] = s.sample_count;
    r["rmse_m"] = s.rmse;
    r["ci95_m"] = num(s.ci95);
    return r;
}

void write_peaks(const fs::path& path, const std::vector<PeakFit>& peaks)
{
    std::ostringstream o;
    o << "x_m\ty_m\tx_px\ty_px\tamplitude\toffset\twidth_sigma_m\tci95_center_m\titerations\n";
    for (const auto& p : peaks)
        o << tsv(p.center.x) << '\t' << tsv(p.center.y) << '\t' << tsv(p.center_px.x) << '\t' << tsv(p.center_px.y)
          << '\t' << tsv(p.amplitude) << '\t' << tsv(p.offset) << '\t' << tsv(p.width_sigma) << '\t'
          << tsv(p.ci95_center) << '\t' << p.iterations << '\n';
    write_text_file(path, o.str());
}

void render(std::ostringstream& o, const Report& r, int indent)
{
    const std::string pad(indent * 2, ' ');
    for (auto it = r.begin(); it != r.end(); ++it) {
        const Report& v = it.value();
        if (v.is_object()) {
            o << pad << it.key() << ":\n";
            render(o, v, indent + 1);
        } else if (v.is_array() && !v.empty() && v.front().is_object()) {
            o << pad << it.key() << ":\n";
            for (std::size_t i = 0; i < v.size(); ++i) {
                o << pad << "  - [" << i << "]\n";
                render(o, v[i], indent + 2);
            }
        } else if (v.is_number_float()) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.10g", v.get<double>());
            o << pad << it.key() << ": " << buf << '\n';
        } else if (v.is_string()) {
            o << pad << it.key() << ": " << v.get<std::string>() << '\n';
        } else {
            o << pad << it.key() << ": " << v.dump() << '\n';
        }
    }
}

} // namespace

std::string render_text(const Report& report)
{
    std::ostringstream o;
    render(o, report, 0);
    return o.str();
}

Report run_simulate(RunConfig config, const CommandOptions& options)
{
    const auto& prism = require(config.prism, "prism", "simulate");
    const auto& beam = require(config.beam, "beam", "simulate");
    const auto& grid = require(config.grid, "grid", "simulate");
    prepare(config, options);

    const DeflectionGeometry g = beam_wavevectors(prism, beam);
    const IntensityField field = synthesize(config, g, beam, grid);
    write_field(options.out_dir / "field", field, config.seed);

    Report r;
    r["command"] = "simulate";
    r["seed"] = config.seed;
    r["geometry"] = geometry_report(prism, g);
    const auto [lo, hi] = std::minmax_element(field.values.flat().begin(), field.values.flat().end());
    Report f;
    f["model"] = config.field && config.field->model == FieldModel::SectorEnvelope ? "sector_envelope" : "plane_wave";
    if (config.field && config.field->model == FieldModel::SectorEnvelope)
        f["z_m"] = config.field->z.value_or(g.overlap_distance);
    f["image"] = (options.out_dir / "field.pgm").string();
    f["width_px"] = grid.width;
    f["height_px"] = grid.height;
    f["pitch_m"] = grid.pitch;
    f["min_intensity"] = *lo;
    f["max_intensity"] = *hi;
    r["field"] = f;

    if (config.camera) {
        config.camera->seed = config.seed;
        const Frame frame = render_frame(field, *config.camera, 0.0);
        write_frame(options.out_dir / "frame", frame);
        Report c;
        c["image"] = (options.out_dir / "frame.pgm").string();
        c["width_px"] = frame.image.width();
        c["height_px"] = frame.image.height();
        c["pixel_size_m"] = config.camera->pixel_size;
        c["bit_depth"] = config.camera->bit_depth;
        r["frame"] = c;
    }
    finish(r, config, "simulate", options);
    return r;
}

Report run_analyze(RunConfig config, const CommandOptions& options)
{
    if (options.image)
        config.input_image = *options.image;
    if (options.pitch)
        config.analysis_pitch = *options.pitch;
    if (!config.input_image)
        throw Error(ErrorKind::Config, "analyze needs an image path (argument or [input] image)");
    prepare(config, options);

    const Raster raster = read_raster(*config.input_image, config.analysis_pitch);
    const AnalysisOptions opts = config.analysis.value_or(AnalysisOptions{});
    const LatticeAnalysis a = analyze_lattice(raster, opts);
    write_peaks(options.out_dir / "peaks.tsv", a.peaks);

    Report r;
    r["command"] = "analyze";
    r["image"] = config.input_image->string();
    r["pitch_m"] = raster.pitch;
    r["peak_count"] = a.peaks.size();
    r["rejected_candidates"] = a.rejected_candidates;
    r["window_radius_px"] = a.window_radius;
    r["spacing_scale_m"] = a.spacing_scale;
    r["spacing"] = spacing_report(a.spacing);
    if (a.symmetry) {
        Report s;
        s["best_order"] = a.symmetry->best_order;
        s["ring_radius_per_m"] = a.symmetry->ring_radius;
        Report scores = Report::object();
        for (const auto& [q, v] : a.symmetry->score_by_order)
            scores[std::to_string(q)] = v;
        s["score_by_order"] = scores;
        r["symmetry"] = s;
    }
    if (a.flatness) {
        r["flatness"] = *a.flatness;
        r["flatness_central_fraction"] = opts.central_fraction;
    }
    r["peaks_file"] = (options.out_dir / "peaks.tsv").string();
    finish(r, config, "analyze", options);
    return r;
}

Report run_stability(RunConfig config, const CommandOptions& options)
{
    const auto& prism = require(config.prism, "prism", "stability");
    const auto& beam = require(config.beam, "beam", "stability");
    require(config.noise, "noise", "stability");
    const auto& series = require(config.series, "series", "stability");
    prepare(config, options);

    const DeflectionGeometry g = beam_wavevectors(prism, beam);
    NoiseModel noise = *config.noise;
    noise.seed = config.seed;
    SeriesConfig sc;
    sc.interval = series.interval;
    sc.frame_count = series.frame_count;
    if (config.grid)
        sc.grid = *config.grid;
    if (config.camera) {
        sc.camera = *config.camera;
    } else {
        sc.camera.exposure_gain = 1.0 / prism.facet_count;
    }
    sc.camera.seed = config.seed;
    sc.initial_phases = phases_for(config, prism.facet_count);
    sc.validate();

    const auto frames = generate_time_series(g, beam, noise, sc);
    if (series.write_frames) {
        fs::create_directories(options.out_dir / "frames");
        for (std::size_t i = 0; i < frames.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "frame_%05zu", i);
            write_frame(options.out_dir / "frames" / name, frames[i]);
        }
    }

    const auto analyses = spacing_series(frames, config.analysis.value_or(AnalysisOptions{}));
    const auto positions = track_reference_positions(analyses);
    const StabilityReport report = stability_report(analyses);

    std::ostringstream o;
    o << "time_s\tspacing_m\tci95_m\tposition_x_m\tposition_y_m\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < analyses.size(); ++i) {
        const auto& fa = analyses[i];
        const auto& pos = positions[i];
        o << tsv(fa.time) << '\t' << tsv(fa.spacing ? fa.spacing->mean_spacing : nan) << '\t'
          << tsv(fa.spacing ? fa.spacing->ci95 : nan) << '\t' << tsv(pos ? pos->x : nan) << '\t'
          << tsv(pos ? pos->y : nan) << '\n';
    }
    write_text_file(options.out_dir / "series.tsv", o.str());

    Report r;
    r["command"] = "stability";
    r["seed"] = config.seed;
    r["frame_count"] = frames.size();
    r["interval_s"] = sc.interval;
    r["mean_spacing_m"] = report.mean_spacing;
    r["spacing_rmse_m"] = report.spacing_rmse;
    r["spacing_rmse_relative"] = report.spacing_rmse_relative;
    r["rmse_reference"] = "series mean";
    r["position_drift_max_m"] = report.position_drift_max;
    r["position_drift_relative"] = report.position_drift_relative;
    r["envelope_spacing_rmse_relative"] = kEnvelopeSpacingRmseRelative;
    r["envelope_drift_relative"] = kEnvelopeDriftRelative;
    r["within_reference_envelope"] = report.within_reference_envelope;
    r["failed_frames"] = report.failed_frames;
    Report errors = Report::array();
    for (const auto& fa : analyses)
        if (!fa.error.empty())
            errors.push_back({{"frame", fa.index}, {"error", fa.error}});
    if (!errors.empty())
        r["frame_errors"] = errors;
    r["series_file"] = (options.out_dir / "series.tsv").string();
    finish(r, config, "stability", options);
    return r;
}

Report run_project(RunConfig config, const CommandOptions& options)
{
    const auto& telescope = require(config.telescope, "telescope", "project");
    const auto& species = require(config.species, "species", "project");
    prepare(config, options);
    if (!config.project)
        config.project = ProjectSettings{};
    if (options.measured_spacing)
        config.project->measured_spacing = *options.measured_spacing;

    const BeamSpec beam = config.beam.value_or(BeamSpec{});
    const PrismSpec prism = config.prism.value_or(PrismSpec{});
    double spacing = 0.0;
    std::string spacing_source = "measured";
    if (config.project->measured_spacing) {
        spacing = *config.project->measured_spacing;
    } else {
        const auto a = config.prism ? predicted_lattice_constant(beam_wavevectors(prism, beam)) : std::nullopt;
        if (!a)
            throw Error(ErrorKind::Config, "project needs a measured spacing ([project] measured_spacing_* or "
                                           "--spacing-um) or a [prism] with a closed-form lattice constant");
        spacing = *a;
        spacing_source = "predicted";
    }

    const double factor = demagnification(telescope);
    const double projected = project_constant(spacing, factor, config.project->direction);
    const double coefficient = dipole_potential_coefficient(species, beam.wavelength);

    Report r;
    r["command"] = "project";
    r["spacing_m"] = spacing;
    r["spacing_source"] = spacing_source;
    r["telescope_factor"] = factor;
    r["direction"] = config.project->direction == ProjectionDirection::Demagnify ? "demagnify" : "magnify";
    r["projected_spacing_m"] = projected;

    Report sp;
    sp["name"] = species.name;
    sp["mass_kg"] = species.mass;
    sp["transition_wavelength_m"] = species.transition_wavelength;
    sp["linewidth_rad_s"] = species.natural_linewidth;
    r["species"] = sp;

    Report er;
    er["lattice_recoil_j"] = recoil_energy(species, projected);
    er["lattice_recoil_convention"] = "h^2/(8 m a^2), k_L = pi/a with a the projected spacing";
    er["photon_recoil_j"] = photon_recoil_energy(species, beam.wavelength);
    er["photon_recoil_convention"] = "h^2/(2 m lambda^2), one photon of the lattice light";
    r["recoil"] = er;

    Report dp;
    dp["lattice_wavelength_m"] = beam.wavelength;
    dp["potential_per_intensity_j_m2_w"] = coefficient;
    dp["sign"] = coefficient > 0.0 ? "repulsive" : "attractive";
    if (beam.power > 0.0) {
        const DepthChain chain =
            depth_chain(beam.power, beam.waist, telescope, prism.facet_count, beam.wavelength, projected, species);
        dp["power_w"] = beam.power;
        dp["facet_count"] = prism.facet_count;
        dp["atom_plane_waist_m"] = chain.atom_plane_waist;
        dp["envelope_intensity_w_m2"] = chain.envelope_intensity;
        dp["lattice_peak_intensity_w_m2"] = chain.lattice_peak_intensity;
        auto depth = [](const DepthEstimate& d) {
            Report x;
            x["depth_lattice_er"] = d.depth_er;
            x["depth_photon_er"] = d.depth_photon_er;
            x["potential_depth_j"] = d.potential_depth;
            return x;
        };
        dp["peak_to_valley"] = depth(chain.peak_to_valley);
        dp["envelope_referenced"] = depth(chain.envelope_referenced);
    }
    r["depth"] = dp;
    finish(r, config, "project", options);
    return r;
}

Report run_sweep(RunConfig config, const CommandOptions& options)
{
    const auto& base_prism = require(config.prism, "prism", "sweep");
    const auto& base_beam = require(config.beam, "beam", "sweep");
    const auto& grid = require(config.grid, "grid", "sweep");
    const auto& sweep = require(config.sweep, "sweep", "sweep");
    prepare(config, options);

    const auto apexes = sweep.apex_angles.empty() ? std::vector<double>{base_prism.apex_angle} : sweep.apex_angles;
    const auto counts = sweep.facet_counts.empty() ? std::vector<int>{base_prism.facet_count} : sweep.facet_counts;
    const auto lambdas = sweep.wavelengths.empty() ? std::vector<double>{base_beam.wavelength} : sweep.wavelengths;
    AnalysisOptions opts = config.analysis.value_or(AnalysisOptions{});
    opts.flatness = false;

    std::ostringstream table;
    table << "facet_count\tapex_angle_deg\twavelength_m\tdeflection_deg\toverlap_distance_m\tpredicted_m\tmeasured_m"
             "\tbest_order\tstatus\n";
    Report rows = Report::array();
    int failures = 0;
    for (int n : counts) {
        for (double apex : apexes) {
            for (double lambda : lambdas) {
                PrismSpec prism = base_prism;
                prism.facet_count = n;
                prism.apex_angle = apex;
                prism.facet_angle_error.clear();
                BeamSpec beam = base_beam;
                beam.wavelength = lambda;
                Report row;
                row["facet_count"] = n;
                row["apex_angle_deg"] = rad_to_deg(apex);
                row["wavelength_m"] = lambda;
                double measured = std::numeric_limits<double>::quiet_NaN();
                std::optional<double> predicted;
                int best = 0;
                std::string status = "ok";
                double deflection = std::numeric_limits<double>::quiet_NaN(), overlap = deflection;
                try {
                    const DeflectionGeometry g = beam_wavevectors(prism, beam);
                    deflection = rad_to_deg(g.deflection_angle);
                    overlap = g.overlap_distance;
                    predicted = predicted_lattice_constant(g);
                    if (sweep.analyze) {
                        const auto a = analyze_lattice(to_raster(plane_wave_intensity(g, phases_for(RunConfig{}, n), grid)), opts);
                        measured = a.spacing.mean_spacing;
                        if (a.symmetry)
                            best = a.symmetry->best_order;
                    }
                } catch (const Error& e) {
                    status = e.what();
                    ++failures;
                }
                row["deflection_deg"] = num(deflection);
                row["overlap_distance_m"] = num(overlap);
                row["predicted_m"] = predicted ? Report(*predicted) : Report(nullptr);
                row["measured_m"] = num(measured);
                row["best_order"] = best;
                row["status"] = status;
                rows.push_back(row);
                table << n << '\t' << tsv(rad_to_deg(apex)) << '\t' << tsv(lambda) << '\t' << tsv(deflection) << '\t'
                      << tsv(overlap) << '\t' << tsv(predicted.value_or(std::numeric_limits<double>::quiet_NaN()))
                      << '\t' << tsv(measured) << '\t' << best << '\t' << status << '\n';
            }
        }
    }
    write_text_file(options.out_dir / "sweep.tsv", table.str());

    Report r;
    r["command"] = "sweep";
    r["points"] = rows.size();
    r["failed_points"] = failures;
    r["table_file"] = (options.out_dir / "sweep.tsv").string();
    r["rows"] = rows;
    finish(r, config, "sweep", options);
    return r;
}

} // namespace prismlattice::cli
