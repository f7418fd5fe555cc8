#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace sgq {

// 8-bit grayscale, row-major. Black = 0, white = 255.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(int w, int h, std::uint8_t fill = 0) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    bool same_size(const Image& o) const { return width == o.width && height == o.height; }
};

// Double-precision working image for the degradation pipeline and features.
struct ImageF {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    ImageF() = default;
    ImageF(int w, int h, double fill = 0.0) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

ImageF to_float(const Image& img);
// clamps to [0,255] and rounds half away from zero
Image quantize(const ImageF& img);

void write_pgm(const std::filesystem::path& path, const Image& img);
Image read_pgm(const std::filesystem::path& path);

// Samples with replicate padding outside the frame.
double bilinear_at(const ImageF& img, double x, double y);

// --- degradation primitives (all pure; sigma<=0 / len<=1 are identities) ---

// separable Gaussian, kernel radius ceil(3*sigma), border weights renormalized
ImageF gaussian_blur(const ImageF& img, double sigma);
// straight-line PSF: round(len) taps centered on the pixel at the given angle
ImageF motion_blur(const ImageF& img, double len, double angle);
// translates content by (dx, dy) via bilinear sampling with replicate borders
ImageF subpixel_shift(const ImageF& img, double dx, double dy);
// multiplies by a horizontal ramp spanning relative range `strength` around 1
ImageF illumination_tilt(const ImageF& img, double strength);
// 255 * (v/255)^gamma on values clamped to [0,255]
ImageF gamma_curve(const ImageF& img, double gamma);

// area-averaging resample to (w, h); exact for integer downscale ratios
ImageF resample_area(const ImageF& img, int w, int h);

}  // namespace sgq
