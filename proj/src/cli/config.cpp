#include "config.hpp"

#include "prismlattice/error.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace prismlattice::cli {

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_list(const std::string& value)
{
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(trim(item));
    return out;
}

struct Unit {
    const char* suffix;
    double scale;
};

enum class Dimension { Length, Angle, Time, Power, Rate, Mass };

const std::vector<Unit>& units(Dimension d)
{
    static const std::vector<Unit> length{{"m", 1.0}, {"mm", 1e-3}, {"um", 1e-6}, {"nm", 1e-9}};
    static const std::vector<Unit> angle{{"rad", 1.0}, {"mrad", 1e-3}, {"deg", std::numbers::pi / 180.0}};
    static const std::vector<Unit> time{{"s", 1.0}, {"ms", 1e-3}, {"min", 60.0}};
    static const std::vector<Unit> power{{"w", 1.0}, {"mw", 1e-3}};
    static const std::vector<Unit> rate{{"rad_s", 1.0}, {"urad_s", 1e-6}, {"deg_s", std::numbers::pi / 180.0}};
    static const std::vector<Unit> mass{{"kg", 1.0}, {"u", 1.66053906660e-27}};
    switch (d) {
    case Dimension::Length: return length;
    case Dimension::Angle: return angle;
    case Dimension::Time: return time;
    case Dimension::Power: return power;
    case Dimension::Rate: return rate;
    case Dimension::Mass: return mass;
    }
    return length;
}

std::string unit_hint(Dimension d)
{
    std::string hint;
    for (const auto& u : units(d))
        hint += (hint.empty() ? "_" : ", _") + std::string(u.suffix);
    return hint;
}

// Typed access to one section. Every lookup marks the matching entry as
// used; finish() rejects whatever was not claimed.
class SectionReader {
public:
    SectionReader(const ConfigDocument& doc, const ConfigSection& section)
        : doc_(doc), section_(section), used_(section.entries.size(), false)
    {
        std::set<std::string> seen;
        for (const auto& e : section.entries)
            if (!seen.insert(e.key).second)
                fail(e, "duplicate key '" + e.key + "'");
    }

    std::optional<double> number(const std::string& key)
    {
        const auto* e = take(key);
        return e ? std::optional<double>(parse_double(*e, e->value)) : std::nullopt;
    }

    std::optional<long long> integer(const std::string& key)
    {
        const auto* e = take(key);
        return e ? std::optional<long long>(parse_int(*e, e->value)) : std::nullopt;
    }

    std::optional<std::string> text(const std::string& key)
    {
        const auto* e = take(key);
        return e ? std::optional<std::string>(e->value) : std::nullopt;
    }

    std::optional<bool> boolean(const std::string& key)
    {
        const auto* e = take(key);
        if (!e)
            return std::nullopt;
        const std::string v = lower(e->value);
        if (v == "true" || v == "yes" || v == "on" || v == "1")
            return true;
        if (v == "false" || v == "no" || v == "off" || v == "0")
            return false;
        fail(*e, "expected a boolean for '" + e->key + "', got '" + e->value + "'");
    }

    std::optional<std::vector<long long>> integer_list(const std::string& key)
    {
        const auto* e = take(key);
        if (!e)
            return std::nullopt;
        std::vector<long long> out;
        for (const auto& item : split_list(e->value))
            out.push_back(parse_int(*e, item));
        return out;
    }

    std::optional<double> quantity(const std::string& base, Dimension d)
    {
        auto [e, scale] = take_quantity(base, d);
        return e ? std::optional<double>(parse_double(*e, e->value) * scale) : std::nullopt;
    }

    std::optional<std::vector<double>> quantity_list(const std::string& base, Dimension d)
    {
        auto [e, scale] = take_quantity(base, d);
        if (!e)
            return std::nullopt;
        std::vector<double> out;
        for (const auto& item : split_list(e->value))
            out.push_back(parse_double(*e, item) * scale);
        return out;
    }

    void finish() const
    {
        for (std::size_t i = 0; i < used_.size(); ++i)
            if (!used_[i])
                fail(section_.entries[i], "unknown key '" + section_.entries[i].key + "' in section [" + section_.name + "]");
    }

    [[noreturn]] void fail(const ConfigEntry& e, const std::string& message) const
    {
        throw Error(ErrorKind::Config, doc_.source + ":" + std::to_string(e.line) + ": " + message);
    }

private:
    const ConfigEntry* take(const std::string& key)
    {
        for (std::size_t i = 0; i < section_.entries.size(); ++i) {
            if (section_.entries[i].key == key) {
                used_[i] = true;
                return &section_.entries[i];
            }
        }
        return nullptr;
    }

    std::pair<const ConfigEntry*, double> take_quantity(const std::string& base, Dimension d)
    {
        const ConfigEntry* found = nullptr;
        double scale = 1.0;
        for (std::size_t i = 0; i < section_.entries.size(); ++i) {
            const auto& e = section_.entries[i];
            if (e.key == base)
                fail(e, "'" + base + "' in [" + section_.name + "] needs a unit suffix (" + unit_hint(d) + ")");
            if (e.key.rfind(base + "_", 0) != 0)
                continue;
            const std::string suffix = e.key.substr(base.size() + 1);
            const auto& table = units(d);
            const auto it = std::find_if(table.begin(), table.end(), [&](const Unit& u) { return suffix == u.suffix; });
            if (it == table.end())
                fail(e, "unsupported unit '_" + suffix + "' for '" + base + "' (use " + unit_hint(d) + ")");
            if (found)
                fail(e, "'" + base + "' given more than once in [" + section_.name + "]");
            found = &e;
            scale = it->scale;
            used_[i] = true;
        }
        return {found, scale};
    }

    double parse_double(const ConfigEntry& e, const std::string& text) const
    {
        double v = 0.0;
        const char* end = text.data() + text.size();
        const auto [ptr, ec] = std::from_chars(text.data(), end, v);
        if (ec != std::errc() || ptr != end || text.empty())
            fail(e, "expected a number for '" + e.key + "', got '" + text + "'");
        return v;
    }

    long long parse_int(const ConfigEntry& e, const std::string& text) const
    {
        long long v = 0;
        const char* end = text.data() + text.size();
        const auto [ptr, ec] = std::from_chars(text.data(), end, v);
        if (ec != std::errc() || ptr != end || text.empty())
            fail(e, "expected an integer for '" + e.key + "', got '" + text + "'");
        return v;
    }

    const ConfigDocument& doc_;
    const ConfigSection& section_;
    std::vector<bool> used_;
};

int to_int(long long v, const char* what)
{
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw Error(ErrorKind::Config, std::string(what) + " out of range");
    return static_cast<int>(v);
}

std::filesystem::path resolve_path(const std::string& raw, const std::filesystem::path& base_dir)
{
    const std::filesystem::path p(raw);
    if (p.is_absolute())
        return p;
    if (!base_dir.empty() && std::filesystem::exists(base_dir / p))
        return base_dir / p;
    if (std::filesystem::exists(data_dir() / p))
        return data_dir() / p;
    return base_dir.empty() ? p : base_dir / p;
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<double>& values)
{
    std::string out;
    for (double v : values)
        out += (out.empty() ? "" : ", ") + fmt(v);
    return out;
}

// Domain validation failures are re-raised with the section location.
template <typename F>
void validated(const ConfigDocument& doc, const ConfigSection& section, F&& check)
{
    try {
        check();
    } catch (const Error& e) {
        throw Error(ErrorKind::Config,
                    doc.source + ":" + std::to_string(section.line) + ": [" + section.name + "] " + e.what());
    }
}

} // namespace

const ConfigSection* ConfigDocument::find(const std::string& name) const
{
    for (const auto& s : sections)
        if (s.name == name)
            return &s;
    return nullptr;
}

std::filesystem::path data_dir()
{
#ifdef PRISMLATTICE_DATA_DIR
    return PRISMLATTICE_DATA_DIR;
#else
    return "data";
#endif
}

ConfigDocument parse_config(const std::string& text, const std::string& source)
{
    ConfigDocument doc;
    doc.source = source;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw Error(ErrorKind::Config, source + ":" + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, raw)) {
        ++line_no;
        const auto cut = raw.find_first_of("#;");
        const std::string line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                fail("malformed section header '" + line + "'");
            const std::string name = lower(trim(line.substr(1, line.size() - 2)));
            if (name.empty())
                fail("empty section name");
            if (doc.find(name))
                fail("section [" + name + "] appears twice");
            doc.sections.push_back({name, line_no, {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail("expected 'key = value', got '" + line + "'");
        if (doc.sections.empty())
            fail("key outside of any section");
        const std::string key = lower(trim(line.substr(0, eq)));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            fail("missing key before '='");
        if (value.empty())
            fail("missing value for '" + key + "'");
        doc.sections.back().entries.push_back({key, value, line_no});
    }
    return doc;
}

ConfigDocument load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Io, "cannot open config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

RunConfig resolve_config(const ConfigDocument& doc, const std::filesystem::path& base_dir)
{
    static const std::set<std::string> known{"run",   "prism", "beam",  "grid",      "field",   "camera",  "analysis",
                                             "input", "noise", "series", "telescope", "species", "project", "sweep"};
    for (const auto& s : doc.sections)
        if (!known.count(s.name))
            throw Error(ErrorKind::Config,
                        doc.source + ":" + std::to_string(s.line) + ": unknown section [" + s.name + "]");

    RunConfig cfg;
    auto section = [&](const char* name) { return doc.find(name); };

    if (const auto* s = section("run")) {
        SectionReader r(doc, *s);
        if (auto v = r.integer("seed")) {
            if (*v < 0)
                throw Error(ErrorKind::Config, doc.source + ": seed must be non-negative");
            cfg.seed = static_cast<std::uint64_t>(*v);
        }
        r.finish();
    }

    if (const auto* s = section("prism")) {
        SectionReader r(doc, *s);
        PrismSpec p;
        if (auto v = r.integer("facet_count"))
            p.facet_count = to_int(*v, "facet_count");
        if (auto v = r.quantity("apex_angle", Dimension::Angle))
            p.apex_angle = *v;
        if (auto v = r.number("refractive_index"))
            p.refractive_index = *v;
        if (auto v = r.quantity_list("facet_angle_error", Dimension::Angle))
            p.facet_angle_error = *v;
        r.finish();
        validated(doc, *s, [&] { p.validate(); });
        cfg.prism = p;
    }

    if (const auto* s = section("beam")) {
        SectionReader r(doc, *s);
        BeamSpec b;
        if (auto v = r.quantity("wavelength", Dimension::Length))
            b.wavelength = *v;
        if (auto v = r.quantity("waist", Dimension::Length))
            b.waist = *v;
        if (auto v = r.quantity("power", Dimension::Power))
            b.power = *v;
        if (auto v = r.number("amplitude"))
            b.amplitude = *v;
        r.finish();
        validated(doc, *s, [&] { b.validate(); });
        cfg.beam = b;
    }

    if (const auto* s = section("grid")) {
        SectionReader r(doc, *s);
        int w = 1024, h = 1024;
        double pitch = 1e-6;
        if (auto v = r.integer("width_px"))
            w = to_int(*v, "width_px");
        if (auto v = r.integer("height_px"))
            h = to_int(*v, "height_px");
        if (auto v = r.quantity("pitch", Dimension::Length))
            pitch = *v;
        r.finish();
        GridSpec g;
        validated(doc, *s, [&] {
            g = GridSpec::centered(w, h, pitch);
            g.validate();
        });
        cfg.grid = g;
    }

    if (const auto* s = section("field")) {
        SectionReader r(doc, *s);
        FieldSettings f;
        if (auto v = r.text("model")) {
            const std::string m = lower(*v);
            if (m == "plane_wave")
                f.model = FieldModel::PlaneWave;
            else if (m == "sector_envelope")
                f.model = FieldModel::SectorEnvelope;
            else
                throw Error(ErrorKind::Config, doc.source + ": [field] model must be plane_wave or sector_envelope, got '" + *v + "'");
        }
        f.z = r.quantity("z", Dimension::Length);
        if (auto v = r.quantity_list("phases", Dimension::Angle))
            f.phases.values = *v;
        r.finish();
        cfg.field = f;
    }

    if (const auto* s = section("camera")) {
        SectionReader r(doc, *s);
        CameraSpec c;
        if (auto v = r.quantity("pixel_size", Dimension::Length))
            c.pixel_size = *v;
        if (auto v = r.integer("bit_depth"))
            c.bit_depth = to_int(*v, "bit_depth");
        if (auto v = r.number("exposure_gain"))
            c.exposure_gain = *v;
        if (auto v = r.number("read_noise_counts"))
            c.read_noise_sigma = *v;
        r.finish();
        validated(doc, *s, [&] { c.validate(); });
        cfg.camera = c;
    }

    if (const auto* s = section("analysis")) {
        SectionReader r(doc, *s);
        AnalysisOptions a;
        if (auto v = r.number("min_prominence"))
            a.min_prominence = *v;
        a.expected_spacing = r.quantity("expected_spacing", Dimension::Length);
        if (auto v = r.number("window_fraction"))
            a.window_fraction = *v;
        if (auto v = r.number("central_fraction"))
            a.central_fraction = *v;
        if (auto v = r.boolean("symmetry"))
            a.symmetry = *v;
        if (auto v = r.boolean("flatness"))
            a.flatness = *v;
        if (auto v = r.integer_list("orders")) {
            a.orders.clear();
            for (long long q : *v)
                a.orders.push_back(to_int(q, "orders"));
        }
        cfg.analysis_pitch = r.quantity("pitch", Dimension::Length);
        r.finish();
        if (!(a.min_prominence >= 0.0 && a.min_prominence <= 1.0))
            throw Error(ErrorKind::Config, doc.source + ": [analysis] min_prominence must lie in [0, 1]");
        if (!(a.window_fraction > 0.0) || !(a.central_fraction > 0.0 && a.central_fraction <= 1.0))
            throw Error(ErrorKind::Config, doc.source + ": [analysis] window_fraction must be > 0 and central_fraction in (0, 1]");
        cfg.analysis = a;
    }

    if (const auto* s = section("input")) {
        SectionReader r(doc, *s);
        if (auto v = r.text("image"))
            cfg.input_image = resolve_path(*v, base_dir);
        r.finish();
    }

    if (const auto* s = section("noise")) {
        SectionReader r(doc, *s);
        NoiseModel n;
        if (auto v = r.quantity("phase_jitter", Dimension::Angle))
            n.phase_jitter_sigma = *v;
        if (auto v = r.quantity("pointing_drift_rate", Dimension::Rate))
            n.pointing_drift_rate = *v;
        if (auto v = r.quantity("pointing_drift_azimuth", Dimension::Angle))
            n.pointing_drift_azimuth = *v;
        if (auto v = r.number("intensity_rms"))
            n.intensity_rms = *v;
        r.finish();
        validated(doc, *s, [&] { n.validate(); });
        cfg.noise = n;
    }

    if (const auto* s = section("series")) {
        SectionReader r(doc, *s);
        SeriesSettings ss;
        if (auto v = r.quantity("interval", Dimension::Time))
            ss.interval = *v;
        if (auto v = r.integer("frame_count"))
            ss.frame_count = to_int(*v, "frame_count");
        if (auto v = r.boolean("write_frames"))
            ss.write_frames = *v;
        r.finish();
        cfg.series = ss;
    }

    if (const auto* s = section("telescope")) {
        SectionReader r(doc, *s);
        TelescopeSpec t;
        if (auto v = r.quantity("f_obj1", Dimension::Length))
            t.f_obj1 = *v;
        if (auto v = r.quantity("f_obj2", Dimension::Length))
            t.f_obj2 = *v;
        r.finish();
        validated(doc, *s, [&] { t.validate(); });
        cfg.telescope = t;
    }

    if (const auto* s = section("species")) {
        SectionReader r(doc, *s);
        SpeciesSpec sp;
        if (auto v = r.text("file"))
            validated(doc, *s, [&] { sp = load_species(resolve_path(*v, base_dir)); });
        if (auto v = r.text("name"))
            sp.name = *v;
        if (auto v = r.quantity("mass", Dimension::Mass))
            sp.mass = *v;
        if (auto v = r.quantity("transition_wavelength", Dimension::Length))
            sp.transition_wavelength = *v;
        if (auto v = r.quantity("linewidth", Dimension::Rate))
            sp.natural_linewidth = *v;
        r.finish();
        validated(doc, *s, [&] { sp.validate(); });
        cfg.species = sp;
    }

    if (const auto* s = section("project")) {
        SectionReader r(doc, *s);
        ProjectSettings p;
        p.measured_spacing = r.quantity("measured_spacing", Dimension::Length);
        if (auto v = r.text("direction")) {
            const std::string d = lower(*v);
            if (d == "demagnify")
                p.direction = ProjectionDirection::Demagnify;
            else if (d == "magnify")
                p.direction = ProjectionDirection::Magnify;
            else
                throw Error(ErrorKind::Config, doc.source + ": [project] direction must be demagnify or magnify, got '" + *v + "'");
        }
        r.finish();
        cfg.project = p;
    }

    if (const auto* s = section("sweep")) {
        SectionReader r(doc, *s);
        SweepSettings sw;
        if (auto v = r.quantity_list("apex_angle", Dimension::Angle))
            sw.apex_angles = *v;
        if (auto v = r.integer_list("facet_count"))
            for (long long n : *v)
                sw.facet_counts.push_back(to_int(n, "facet_count"));
        if (auto v = r.quantity_list("wavelength", Dimension::Length))
            sw.wavelengths = *v;
        if (auto v = r.boolean("analyze"))
            sw.analyze = *v;
        r.finish();
        cfg.sweep = sw;
    }

    return cfg;
}

std::string format_manifest(const RunConfig& c, const std::string& command)
{
    std::ostringstream o;
    o << "# prismlattice " << command << " manifest\n";
    o << "[run]\nseed = " << c.seed << "\n";
    if (c.prism) {
        o << "\n[prism]\nfacet_count = " << c.prism->facet_count << "\napex_angle_rad = " << fmt(c.prism->apex_angle)
          << "\nrefractive_index = " << fmt(c.prism->refractive_index) << "\n";
        if (!c.prism->facet_angle_error.empty())
            o << "facet_angle_error_rad = " << fmt_list(c.prism->facet_angle_error) << "\n";
    }
    if (c.beam)
        o << "\n[beam]\nwavelength_m = " << fmt(c.beam->wavelength) << "\nwaist_m = " << fmt(c.beam->waist)
          << "\npower_w = " << fmt(c.beam->power) << "\namplitude = " << fmt(c.beam->amplitude) << "\n";
    if (c.grid)
        o << "\n[grid]\nwidth_px = " << c.grid->width << "\nheight_px = " << c.grid->height
          << "\npitch_m = " << fmt(c.grid->pitch) << "\n";
    if (c.field) {
        o << "\n[field]\nmodel = " << (c.field->model == FieldModel::PlaneWave ? "plane_wave" : "sector_envelope") << "\n";
        if (c.field->z)
            o << "z_m = " << fmt(*c.field->z) << "\n";
        if (!c.field->phases.values.empty())
            o << "phases_rad = " << fmt_list(c.field->phases.values) << "\n";
    }
    if (c.camera)
        o << "\n[camera]\npixel_size_m = " << fmt(c.camera->pixel_size) << "\nbit_depth = " << c.camera->bit_depth
          << "\nexposure_gain = " << fmt(c.camera->exposure_gain) << "\nread_noise_counts = "
          << fmt(c.camera->read_noise_sigma) << "\n";
    if (c.analysis || c.analysis_pitch) {
        const AnalysisOptions a = c.analysis.value_or(AnalysisOptions{});
        o << "\n[analysis]\nmin_prominence = " << fmt(a.min_prominence) << "\n";
        if (a.expected_spacing)
            o << "expected_spacing_m = " << fmt(*a.expected_spacing) << "\n";
        o << "window_fraction = " << fmt(a.window_fraction) << "\ncentral_fraction = " << fmt(a.central_fraction)
          << "\nsymmetry = " << (a.symmetry ? "true" : "false") << "\nflatness = " << (a.flatness ? "true" : "false")
          << "\norders = ";
        for (std::size_t i = 0; i < a.orders.size(); ++i)
            o << (i ? ", " : "") << a.orders[i];
        o << "\n";
        if (c.analysis_pitch)
            o << "pitch_m = " << fmt(*c.analysis_pitch) << "\n";
    }
    if (c.input_image)
        o << "\n[input]\nimage = " << std::filesystem::absolute(*c.input_image).string() << "\n";
    if (c.noise)
        o << "\n[noise]\nphase_jitter_rad = " << fmt(c.noise->phase_jitter_sigma)
          << "\npointing_drift_rate_rad_s = " << fmt(c.noise->pointing_drift_rate)
          << "\npointing_drift_azimuth_rad = " << fmt(c.noise->pointing_drift_azimuth)
          << "\nintensity_rms = " << fmt(c.noise->intensity_rms) << "\n";
    if (c.series)
        o << "\n[series]\ninterval_s = " << fmt(c.series->interval) << "\nframe_count = " << c.series->frame_count
          << "\nwrite_frames = " << (c.series->write_frames ? "true" : "false") << "\n";
    if (c.telescope)
        o << "\n[telescope]\nf_obj1_m = " << fmt(c.telescope->f_obj1) << "\nf_obj2_m = " << fmt(c.telescope->f_obj2) << "\n";
    if (c.species) {
        o << "\n[species]\n";
        if (!c.species->name.empty())
            o << "name = " << c.species->name << "\n";
        o << "mass_kg = " << fmt(c.species->mass) << "\ntransition_wavelength_m = " << fmt(c.species->transition_wavelength)
          << "\nlinewidth_rad_s = " << fmt(c.species->natural_linewidth) << "\n";
    }
    if (c.project) {
        o << "\n[project]\n";
        if (c.project->measured_spacing)
            o << "measured_spacing_m = " << fmt(*c.project->measured_spacing) << "\n";
        o << "direction = " << (c.project->direction == ProjectionDirection::Demagnify ? "demagnify" : "magnify") << "\n";
    }
    if (c.sweep) {
        o << "\n[sweep]\n";
        if (!c.sweep->apex_angles.empty())
            o << "apex_angle_rad = " << fmt_list(c.sweep->apex_angles) << "\n";
        if (!c.sweep->facet_counts.empty()) {
            o << "facet_count = ";
            for (std::size_t i = 0; i < c.sweep->facet_counts.size(); ++i)
                o << (i ? ", " : "") << c.sweep->facet_counts[i];
            o << "\n";
        }
        if (!c.sweep->wavelengths.empty())
            o << "wavelength_m = " << fmt_list(c.sweep->wavelengths) << "\n";
        o << "analyze = " << (c.sweep->analyze ? "true" : "false") << "\n";
    }
    return o.str();
}

} // namespace prismlattice::cli
