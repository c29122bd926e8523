#pragma once

#include "config.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace prismlattice::cli {

enum class OutputFormat { Text, Structured };

struct CommandOptions {
    std::filesystem::path out_dir = "out";
    OutputFormat format = OutputFormat::Text;
    std::optional<std::uint64_t> seed;              ///< overrides [run] seed
    std::optional<std::filesystem::path> image;     ///< analyze input
    std::optional<double> pitch;                    ///< analyze pixel pitch override, m
    std::optional<double> measured_spacing;         ///< project input, m
};

using Report = nlohmann::ordered_json;

/// Each command writes its files plus `manifest.ini` and `report.txt` or
/// `report.json` under `out_dir`, and returns the report. Sweep points that
/// fail are recorded in the table and counted in `failed_points`.
Report run_simulate(RunConfig config, const CommandOptions& options);
Report run_analyze(RunConfig config, const CommandOptions& options);
Report run_stability(RunConfig config, const CommandOptions& options);
Report run_project(RunConfig config, const CommandOptions& options);
Report run_sweep(RunConfig config, const CommandOptions& options);

/// Indented `key: value` rendering of a report.
std::string render_text(const Report& report);

} // namespace prismlattice::cli
