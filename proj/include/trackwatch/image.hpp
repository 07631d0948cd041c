#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace trackwatch {

// Grayscale frame, row-major, intensities in [0, 1].
class Frame {
public:
    Frame() = default;
    Frame(int width, int height, double fill = 0.0);
    Frame(int width, int height, std::vector<double> intensities);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }

    double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    double& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    // Edge-replicating lookup.
    double clamped(int x, int y) const;

    const std::vector<double>& data() const noexcept { return data_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

// Throws ValidationError unless every intensity is finite and in [0, 1].
void validate_frame(const Frame& frame);

struct Sample {
    double value = 0.0;
    double dx = 0.0;  // derivative of the bilinear interpolant
    double dy = 0.0;
};

// Bilinear interpolation with edge replication outside the grid. The
// returned gradient is the exact derivative of the interpolant (one-sided at
// cell boundaries, taken from the cell containing the point).
Sample sample_bilinear(const Frame& frame, double x, double y);

// Separable Gaussian blur with edge replication; kernel radius ceil(3 sigma).
Frame gaussian_blur(const Frame& frame, double sigma);

// Blur then keep even pixels, so a coordinate x at this level is x / 2 one
// level up.
Frame downsample(const Frame& frame, double sigma = 1.0);

// levels[0] is the input frame; each further level is downsample(previous).
std::vector<Frame> build_pyramid(const Frame& frame, int levels, double sigma = 1.0);

// Binary PGM (P5, maxval 255). Intensities are scaled by 1/255.
Frame read_pgm(const std::string& path);
Frame decode_pgm(const std::string& bytes);
void write_pgm(const std::string& path, const Frame& frame);
std::string encode_pgm(const Frame& frame);

// 8-bit grayscale PNG.
std::string encode_png(const Frame& frame);

// frame_%06d.pgm files from a directory, lexicographic order.
std::vector<std::string> list_frame_files(const std::string& dir);

} // namespace trackwatch
