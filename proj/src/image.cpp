#include "trackwatch/image.hpp"

#include "trackwatch/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <regex>
#include <sstream>

namespace trackwatch {

Frame::Frame(int width, int height, double fill) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw ValidationError("negative frame dimensions");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
}

Frame::Frame(int width, int height, std::vector<double> intensities)
    : width_(width), height_(height), data_(std::move(intensities)) {
    if (width < 0 || height < 0) throw ValidationError("negative frame dimensions");
    if (data_.size() != static_cast<std::size_t>(width) * height) {
        throw ValidationError("frame data size does not match width*height");
    }
}

double Frame::clamped(int x, int y) const {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return at(x, y);
}

void validate_frame(const Frame& frame) {
    for (double v : frame.data()) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw ValidationError("frame intensities must be finite and within [0, 1]");
        }
    }
}

Sample sample_bilinear(const Frame& f, double x, double y) {
    const double cx = std::clamp(x, 0.0, static_cast<double>(f.width() - 1));
    const double cy = std::clamp(y, 0.0, static_cast<double>(f.height() - 1));
    int x0 = static_cast<int>(std::floor(cx));
    int y0 = static_cast<int>(std::floor(cy));
    // Keep a full cell on the far edge so the derivative stays defined.
    x0 = std::min(x0, std::max(f.width() - 2, 0));
    y0 = std::min(y0, std::max(f.height() - 2, 0));
    const double fx = cx - x0;
    const double fy = cy - y0;
    const double v00 = f.clamped(x0, y0);
    const double v10 = f.clamped(x0 + 1, y0);
    const double v01 = f.clamped(x0, y0 + 1);
    const double v11 = f.clamped(x0 + 1, y0 + 1);

    Sample s;
    s.value = (1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10 + (1 - fx) * fy * v01 + fx * fy * v11;
    // Outside the grid the replicated image is flat along the clamped axis.
    s.dx = (x == cx) ? (1 - fy) * (v10 - v00) + fy * (v11 - v01) : 0.0;
    s.dy = (y == cy) ? (1 - fx) * (v01 - v00) + fx * (v11 - v10) : 0.0;
    return s;
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;
    return k;
}

} // namespace

Frame gaussian_blur(const Frame& frame, double sigma) {
    if (!(sigma > 0.0)) return frame;
    const auto k = gaussian_kernel(sigma);
    const int r = static_cast<int>(k.size() / 2);
    const int w = frame.width(), h = frame.height();
    Frame tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) acc += k[i + r] * frame.clamped(x + i, y);
            tmp.at(x, y) = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp.clamped(x, y + i);
            out.at(x, y) = acc;
        }
    }
    return out;
}

Frame downsample(const Frame& frame, double sigma) {
    const Frame blurred = gaussian_blur(frame, sigma);
    const int w = (frame.width() + 1) / 2;
    const int h = (frame.height() + 1) / 2;
    Frame out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) out.at(x, y) = blurred.at(2 * x, 2 * y);
    }
    return out;
}

std::vector<Frame> build_pyramid(const Frame& frame, int levels, double sigma) {
    std::vector<Frame> pyr;
    pyr.reserve(static_cast<std::size_t>(std::max(levels, 1)));
    pyr.push_back(frame);
    for (int l = 1; l < levels; ++l) pyr.push_back(downsample(pyr.back(), sigma));
    return pyr;
}

// PGM

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

Frame decode_pgm(const std::string& bytes) {
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < bytes.size()) {
            const char c = bytes[pos];
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> long {
        skip_ws();
        const std::size_t start = pos;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
        if (start == pos) throw ValidationError("malformed PGM header");
        return std::stol(bytes.substr(start, pos - start));
    };
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw ValidationError("not a binary PGM (P5) image");
    }
    pos = 2;
    const long w = read_int();
    const long h = read_int();
    const long maxval = read_int();
    if (w <= 0 || h <= 0) throw ValidationError("PGM has non-positive dimensions");
    if (maxval != 255) throw ValidationError("only maxval 255 PGM images are supported");
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        throw ValidationError("malformed PGM header");
    }
    ++pos;
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() - pos < n) throw ValidationError("truncated PGM pixel data");
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        data[i] = static_cast<unsigned char>(bytes[pos + i]) / 255.0;
    }
    return Frame(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

Frame read_pgm(const std::string& path) {
    try {
        return decode_pgm(read_file(path));
    } catch (const IoError&) {
        throw;
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

namespace {

unsigned char to_byte(double v) {
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

} // namespace

std::string encode_pgm(const Frame& frame) {
    std::ostringstream out;
    out << "P5\n" << frame.width() << ' ' << frame.height() << "\n255\n";
    std::string s = out.str();
    s.reserve(s.size() + frame.data().size());
    for (double v : frame.data()) s.push_back(static_cast<char>(to_byte(v)));
    return s;
}

void write_pgm(const std::string& path, const Frame& frame) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    const auto bytes = encode_pgm(frame);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failure on '" + path + "'");
}

// PNG

namespace {

void put_u32(std::string& s, std::uint32_t v) {
    s.push_back(static_cast<char>((v >> 24) & 0xff));
    s.push_back(static_cast<char>((v >> 16) & 0xff));
    s.push_back(static_cast<char>((v >> 8) & 0xff));
    s.push_back(static_cast<char>(v & 0xff));
}

void put_chunk(std::string& out, const char* type, const std::string& payload) {
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    std::string body(type, 4);
    body += payload;
    out += body;
    const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()));
    put_u32(out, static_cast<std::uint32_t>(crc));
}

} // namespace

std::string encode_png(const Frame& frame) {
    const int w = frame.width(), h = frame.height();
    std::string raw;
    raw.reserve(static_cast<std::size_t>(w + 1) * h);
    for (int y = 0; y < h; ++y) {
        raw.push_back('\0');  // filter: none
        for (int x = 0; x < w; ++x) raw.push_back(static_cast<char>(to_byte(frame.at(x, y))));
    }
    uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
    std::string z(zlen, '\0');
    if (compress2(reinterpret_cast<Bytef*>(z.data()), &zlen, reinterpret_cast<const Bytef*>(raw.data()),
                  static_cast<uLong>(raw.size()), Z_BEST_SPEED) != Z_OK) {
        throw Error("zlib compression failed");
    }
    z.resize(zlen);

    std::string out("\x89PNG\r\n\x1a\n", 8);
    std::string ihdr;
    put_u32(ihdr, static_cast<std::uint32_t>(w));
    put_u32(ihdr, static_cast<std::uint32_t>(h));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(0);  // grayscale
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    put_chunk(out, "IHDR", ihdr);
    put_chunk(out, "IDAT", z);
    put_chunk(out, "IEND", "");
    return out;
}

std::vector<std::string> list_frame_files(const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError("not a directory: '" + dir + "'");
    static const std::regex pattern(R"(frame_\d{6}\.pgm)");
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        const auto name = entry.path().filename().string();
        if (entry.is_regular_file() && std::regex_match(name, pattern)) files.push_back(entry.path().string());
    }
    if (ec) throw IoError("cannot list '" + dir + "': " + ec.message());
    std::sort(files.begin(), files.end());
    return files;
}

} // namespace trackwatch
