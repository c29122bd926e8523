#pragma once

#include "prismlattice/field.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace prismlattice {

/// Sidecar record written next to every image as `<stem>.meta`:
/// one `key = value` pair per line, doubles printed round-trip exact.
struct ImageMetadata {
    std::string kind;                 ///< "field", "frame" or "spectrum"
    int width = 0;
    int height = 0;
    double pitch = 0.0;               ///< metres per pixel (1/m for spectra)
    Vec2 origin{};
    double timestamp = 0.0;
    std::uint64_t seed = 0;
    int bit_depth = 16;
    double intensity_scale = 1.0;     ///< physical units per count (fields)
    CameraSpec camera{};              ///< frames only
};

std::string format_metadata(const ImageMetadata& meta);
ImageMetadata parse_metadata(const std::string& text);

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples).
void write_pgm16(const std::filesystem::path& path, const Array2D<std::uint16_t>& image);
/// Reads binary or ASCII PGM at 8 or 16 bits; samples are returned unscaled.
Array2D<std::uint16_t> read_pgm(const std::filesystem::path& path);

/// Fields are quantized to 16 bits with a power-of-two intensity step, so
/// write -> read -> write reproduces the files byte for byte.
void write_field(const std::filesystem::path& stem, const IntensityField& field, std::uint64_t seed = 0);
IntensityField read_field(const std::filesystem::path& stem);

void write_frame(const std::filesystem::path& stem, const Frame& frame);
Frame read_frame(const std::filesystem::path& stem);

/// Loads any PGM for analysis. Pixel pitch comes from the sidecar when one
/// exists; `pitch_override` wins when given. Fails if neither is available.
Raster read_raster(const std::filesystem::path& image_path, std::optional<double> pitch_override = std::nullopt);

} // namespace prismlattice
