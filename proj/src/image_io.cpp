#include "prismlattice/image_io.hpp"

#include "prismlattice/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace prismlattice {

namespace fs = std::filesystem;

namespace {

std::string exact(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

fs::path with_ext(const fs::path& stem, const char* ext)
{
    fs::path p = stem;
    p += ext;
    return p;
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << text;
}

} // namespace

std::string format_metadata(const ImageMetadata& m)
{
    std::ostringstream os;
    os << "kind = " << m.kind << '\n'
       << "width = " << m.width << '\n'
       << "height = " << m.height << '\n'
       << "pitch_m = " << exact(m.pitch) << '\n'
       << "origin_x_m = " << exact(m.origin.x) << '\n'
       << "origin_y_m = " << exact(m.origin.y) << '\n'
       << "timestamp_s = " << exact(m.timestamp) << '\n'
       << "seed = " << m.seed << '\n'
       << "bit_depth = " << m.bit_depth << '\n'
       << "intensity_scale = " << exact(m.intensity_scale) << '\n';
    if (m.kind == "frame") {
        os << "camera_pixel_size_m = " << exact(m.camera.pixel_size) << '\n'
           << "camera_exposure_gain = " << exact(m.camera.exposure_gain) << '\n'
           << "camera_read_noise_sigma = " << exact(m.camera.read_noise_sigma) << '\n'
           << "camera_seed = " << m.camera.seed << '\n';
    }
    return os.str();
}

ImageMetadata parse_metadata(const std::string& text)
{
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::Io, "metadata line " + std::to_string(lineno) + ": expected key = value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }

    auto get = [&](const char* key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    auto num = [&](const char* key, double fallback) {
        const auto* s = get(key);
        if (!s)
            return fallback;
        try {
            return std::stod(*s);
        } catch (const std::exception&) {
            throw Error(ErrorKind::Io, std::string("metadata key ") + key + " is not a number");
        }
    };
    auto u64 = [&](const char* key) -> std::uint64_t {
        const auto* s = get(key);
        return s ? std::stoull(*s) : 0;
    };

    ImageMetadata m;
    if (const auto* k = get("kind"))
        m.kind = *k;
    m.width = static_cast<int>(num("width", 0));
    m.height = static_cast<int>(num("height", 0));
    m.pitch = num("pitch_m", 0.0);
    m.origin = {num("origin_x_m", 0.0), num("origin_y_m", 0.0)};
    m.timestamp = num("timestamp_s", 0.0);
    m.seed = u64("seed");
    m.bit_depth = static_cast<int>(num("bit_depth", 16));
    m.intensity_scale = num("intensity_scale", 1.0);
    m.camera.pixel_size = num("camera_pixel_size_m", m.pitch);
    m.camera.bit_depth = m.bit_depth;
    m.camera.exposure_gain = num("camera_exposure_gain", 1.0);
    m.camera.read_noise_sigma = num("camera_read_noise_sigma", 0.0);
    m.camera.seed = u64("camera_seed");
    return m;
}

void write_pgm16(const fs::path& path, const Array2D<std::uint16_t>& image)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << "P5\n" << image.width() << ' ' << image.height() << "\n65535\n";
    std::vector<unsigned char> bytes(image.size() * 2);
    auto flat = image.flat();
    for (std::size_t i = 0; i < flat.size(); ++i) {
        bytes[2 * i] = static_cast<unsigned char>(flat[i] >> 8);
        bytes[2 * i + 1] = static_cast<unsigned char>(flat[i] & 0xff);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(ErrorKind::Io, "short write to " + path.string());
}

Array2D<std::uint16_t> read_pgm(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Io, "cannot open " + path.string());

    auto token = [&]() {
        std::string tok;
        char ch;
        while (in.get(ch)) {
            if (ch == '#') {
                std::string skip;
                std::getline(in, skip);
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(ch))) {
                if (!tok.empty())
                    break;
                continue;
            }
            tok.push_back(ch);
        }
        if (tok.empty())
            throw Error(ErrorKind::Io, "truncated PGM header in " + path.string());
        return tok;
    };

    const std::string magic = token();
    if (magic != "P5" && magic != "P2")
        throw Error(ErrorKind::Io, path.string() + " is not a PGM image");
    int width = 0, height = 0, maxval = 0;
    try {
        width = std::stoi(token());
        height = std::stoi(token());
        maxval = std::stoi(token());
    } catch (const std::invalid_argument&) {
        throw Error(ErrorKind::Io, "malformed PGM header in " + path.string());
    }
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
        throw Error(ErrorKind::Io, "unsupported PGM dimensions or maxval in " + path.string());

    Array2D<std::uint16_t> image(width, height);
    auto flat = image.flat();
    if (magic == "P2") {
        for (auto& v : flat)
            v = static_cast<std::uint16_t>(std::stoi(token()));
        return image;
    }
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> bytes(flat.size() * bpp);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size())
        throw Error(ErrorKind::Io, "truncated PGM pixel data in " + path.string());
    for (std::size_t i = 0; i < flat.size(); ++i)
        flat[i] = bpp == 2 ? static_cast<std::uint16_t>((bytes[2 * i] << 8) | bytes[2 * i + 1]) : bytes[i];
    return image;
}

void write_field(const fs::path& stem, const IntensityField& field, std::uint64_t seed)
{
    const auto values = field.values.flat();
    double vmax = 0.0;
    for (double v : values) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw Error(ErrorKind::InvalidSpec, "intensity field holds a negative or non-finite value");
        vmax = std::max(vmax, v);
    }
    // Smallest power of two step that keeps the maximum within 16 bits.
    double step = 1.0;
    if (vmax > 0.0) {
        int exponent = 0;
        std::frexp(vmax / 65535.0, &exponent);
        step = std::ldexp(1.0, exponent);
        while (vmax / (0.5 * step) <= 65535.0)
            step *= 0.5;
    }

    Array2D<std::uint16_t> counts(field.values.width(), field.values.height());
    auto out = counts.flat();
    for (std::size_t i = 0; i < values.size(); ++i)
        out[i] = static_cast<std::uint16_t>(std::min(65535.0, std::nearbyint(values[i] / step)));

    ImageMetadata meta;
    meta.kind = "field";
    meta.width = field.grid.width;
    meta.height = field.grid.height;
    meta.pitch = field.grid.pitch;
    meta.origin = field.grid.origin;
    meta.seed = seed;
    meta.bit_depth = 16;
    meta.intensity_scale = step;
    write_pgm16(with_ext(stem, ".pgm"), counts);
    write_text(with_ext(stem, ".meta"), format_metadata(meta));
}

IntensityField read_field(const fs::path& stem)
{
    const auto meta = parse_metadata(read_text(with_ext(stem, ".meta")));
    const auto counts = read_pgm(with_ext(stem, ".pgm"));
    if (counts.width() != meta.width || counts.height() != meta.height)
        throw Error(ErrorKind::Io, "image size disagrees with metadata for " + stem.string());
    IntensityField field{{meta.width, meta.height, meta.pitch, meta.origin}, Array2D<double>(meta.width, meta.height)};
    auto in = counts.flat();
    auto out = field.values.flat();
    for (std::size_t i = 0; i < in.size(); ++i)
        out[i] = in[i] * meta.intensity_scale;
    return field;
}

void write_frame(const fs::path& stem, const Frame& frame)
{
    ImageMetadata meta;
    meta.kind = "frame";
    meta.width = frame.image.width();
    meta.height = frame.image.height();
    meta.pitch = frame.camera.pixel_size;
    meta.origin = frame.origin;
    meta.timestamp = frame.timestamp;
    meta.seed = frame.camera.seed;
    meta.bit_depth = frame.camera.bit_depth;
    meta.intensity_scale = 1.0;
    meta.camera = frame.camera;
    write_pgm16(with_ext(stem, ".pgm"), frame.image);
    write_text(with_ext(stem, ".meta"), format_metadata(meta));
}

Frame read_frame(const fs::path& stem)
{
    const auto meta = parse_metadata(read_text(with_ext(stem, ".meta")));
    Frame frame;
    frame.image = read_pgm(with_ext(stem, ".pgm"));
    if (frame.image.width() != meta.width || frame.image.height() != meta.height)
        throw Error(ErrorKind::Io, "image size disagrees with metadata for " + stem.string());
    frame.timestamp = meta.timestamp;
    frame.camera = meta.camera;
    frame.origin = meta.origin;
    return frame;
}

Raster read_raster(const fs::path& image_path, std::optional<double> pitch_override)
{
    const auto counts = read_pgm(image_path);
    fs::path meta_path = image_path;
    meta_path.replace_extension(".meta");

    double scale = 1.0;
    Vec2 origin{};
    std::optional<double> pitch = pitch_override;
    if (fs::exists(meta_path)) {
        const auto meta = parse_metadata(read_text(meta_path));
        scale = meta.intensity_scale;
        origin = meta.origin;
        if (!pitch && meta.pitch > 0.0)
            pitch = meta.pitch;
    }
    if (!pitch || !(*pitch > 0.0))
        throw Error(ErrorKind::Io, "no pixel pitch for " + image_path.string() + " (no metadata; pass an explicit pitch)");

    Raster raster{Array2D<double>(counts.width(), counts.height()), *pitch, origin};
    auto in = counts.flat();
    auto out = raster.values.flat();
    for (std::size_t i = 0; i < in.size(); ++i)
        out[i] = in[i] * scale;
    return raster;
}

} // namespace prismlattice
