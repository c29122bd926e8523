#pragma once

#include "prismlattice/analysis.hpp"
#include "prismlattice/error.hpp"
#include "prismlattice/field.hpp"
#include "prismlattice/optics.hpp"
#include "prismlattice/projection.hpp"
#include "prismlattice/stability.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace prismlattice::cli {

struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
};

struct ConfigSection {
    std::string name;
    int line = 0;
    std::vector<ConfigEntry> entries;
};

/// `[section]` headers followed by `key = value` lines; `#` and `;` start
/// comments. Sections keep file order.
struct ConfigDocument {
    std::string source = "<config>";
    std::vector<ConfigSection> sections;

    const ConfigSection* find(const std::string& name) const;
};

ConfigDocument parse_config(const std::string& text, const std::string& source = "<config>");
ConfigDocument load_config(const std::filesystem::path& path);

enum class FieldModel { PlaneWave, SectorEnvelope };

struct FieldSettings {
    FieldModel model = FieldModel::PlaneWave;
    std::optional<double> z; ///< sector model propagation distance; overlap plane when absent
    PhaseVector phases;
};

struct SeriesSettings {
    double interval = 0.6;
    int frame_count = 200;
    bool write_frames = false;
};

struct ProjectSettings {
    std::optional<double> measured_spacing;
    ProjectionDirection direction = ProjectionDirection::Demagnify;
};

struct SweepSettings {
    std::vector<double> apex_angles;
    std::vector<int> facet_counts;
    std::vector<double> wavelengths;
    bool analyze = true;
};

/// Fully resolved run description. Absent sections stay empty so each
/// subcommand can demand exactly what it needs.
struct RunConfig {
    std::uint64_t seed = 0;
    std::optional<PrismSpec> prism;
    std::optional<BeamSpec> beam;
    std::optional<GridSpec> grid;
    std::optional<FieldSettings> field;
    std::optional<CameraSpec> camera;
    std::optional<AnalysisOptions> analysis;
    std::optional<double> analysis_pitch;
    std::optional<std::filesystem::path> input_image;
    std::optional<NoiseModel> noise;
    std::optional<SeriesSettings> series;
    std::optional<TelescopeSpec> telescope;
    std::optional<SpeciesSpec> species;
    std::optional<ProjectSettings> project;
    std::optional<SweepSettings> sweep;
};

/// Converts a document into typed settings. Unknown sections and keys,
/// missing unit suffixes and malformed values are rejected with the source
/// line. Relative paths resolve against `base_dir`, then the data directory.
RunConfig resolve_config(const ConfigDocument& doc, const std::filesystem::path& base_dir = {});

/// Throws a Config error naming `section` and `command` when it is absent.
template <typename T>
const T& require(const std::optional<T>& value, const char* section, const char* command);

/// Canonical SI form of every present section, doubles printed round-trip
/// exact. Parsing it back reproduces the same RunConfig.
std::string format_manifest(const RunConfig& config, const std::string& command);

std::filesystem::path data_dir();

template <typename T>
const T& require(const std::optional<T>& value, const char* section, const char* command)
{
    if (!value)
        throw Error(ErrorKind::Config,
                    std::string("missing section [") + section + "] required by '" + command + "'");
    return *value;
}

} // namespace prismlattice::cli
