#include "sgq/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sgq/common.hpp"

namespace sgq {

ImageF to_float(const Image& img) {
    ImageF out(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) out.pixels[i] = static_cast<double>(img.pixels[i]);
    return out;
}

Image quantize(const ImageF& img) {
    Image out(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        double v = std::clamp(img.pixels[i], 0.0, 255.0);
        out.pixels[i] = static_cast<std::uint8_t>(std::lround(v));
    }
    return out;
}

void write_pgm(const std::filesystem::path& path, const Image& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path.string());
    f << "P5\n" << img.width << " " << img.height << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (!f) throw DataError("write failed: " + path.string());
}

Image read_pgm(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path.string());
    std::string magic;
    f >> magic;
    if (magic != "P5") throw DataError("not a binary PGM: " + path.string());
    auto next_int = [&]() {
        // skips whitespace and '#' comment lines
        for (;;) {
            int c = f.peek();
            if (c == '#') {
                std::string line;
                std::getline(f, line);
            } else if (std::isspace(c)) {
                f.get();
            } else {
                break;
            }
        }
        int v;
        f >> v;
        return v;
    };
    int w = next_int();
    int h = next_int();
    int maxval = next_int();
    if (w <= 0 || h <= 0 || maxval != 255) throw DataError("unsupported PGM header: " + path.string());
    f.get();  // single whitespace after maxval
    Image img(w, h);
    f.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (f.gcount() != static_cast<std::streamsize>(img.pixels.size())) throw DataError("truncated PGM: " + path.string());
    return img;
}

double bilinear_at(const ImageF& img, double x, double y) {
    double fx = std::floor(x);
    double fy = std::floor(y);
    int x0 = static_cast<int>(fx);
    int y0 = static_cast<int>(fy);
    double ax = x - fx;
    double ay = y - fy;
    auto clamped = [&](int xi, int yi) {
        xi = std::clamp(xi, 0, img.width - 1);
        yi = std::clamp(yi, 0, img.height - 1);
        return img.at(xi, yi);
    };
    double v00 = clamped(x0, y0);
    double v10 = clamped(x0 + 1, y0);
    double v01 = clamped(x0, y0 + 1);
    double v11 = clamped(x0 + 1, y0 + 1);
    double top = v00 + ax * (v10 - v00);
    double bot = v01 + ax * (v11 - v01);
    return top + ay * (bot - top);
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double v = std::exp(-0.5 * (i / sigma) * (i / sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

}  // namespace

ImageF gaussian_blur(const ImageF& img, double sigma) {
    if (sigma <= 0.0) return img;
    auto kernel = gaussian_kernel(sigma);
    int radius = static_cast<int>(kernel.size() / 2);
    ImageF tmp(img.width, img.height);
    ImageF out(img.width, img.height);
    // horizontal pass; border weights renormalized over the in-bounds taps
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0, wsum = 0.0;
            int lo = std::max(0, x - radius);
            int hi = std::min(img.width - 1, x + radius);
            for (int j = lo; j <= hi; ++j) {
                double w = kernel[static_cast<std::size_t>(j - x + radius)];
                acc += w * img.at(j, y);
                wsum += w;
            }
            tmp.at(x, y) = acc / wsum;
        }
    }
    // vertical pass
    for (int x = 0; x < img.width; ++x) {
        for (int y = 0; y < img.height; ++y) {
            double acc = 0.0, wsum = 0.0;
            int lo = std::max(0, y - radius);
            int hi = std::min(img.height - 1, y + radius);
            for (int j = lo; j <= hi; ++j) {
                double w = kernel[static_cast<std::size_t>(j - y + radius)];
                acc += w * tmp.at(x, j);
                wsum += w;
            }
            out.at(x, y) = acc / wsum;
        }
    }
    return out;
}

ImageF motion_blur(const ImageF& img, double len, double angle) {
    int taps = static_cast<int>(std::lround(len));
    if (taps <= 1) return img;
    double cx = std::cos(angle);
    double cy = std::sin(angle);
    ImageF out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int t = 0; t < taps; ++t) {
                double offset = t - 0.5 * (taps - 1);
                acc += bilinear_at(img, x + offset * cx, y + offset * cy);
            }
            out.at(x, y) = acc / taps;
        }
    }
    return out;
}

ImageF subpixel_shift(const ImageF& img, double dx, double dy) {
    if (dx == 0.0 && dy == 0.0) return img;
    ImageF out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) out.at(x, y) = bilinear_at(img, x - dx, y - dy);
    return out;
}

ImageF illumination_tilt(const ImageF& img, double strength) {
    if (strength == 0.0) return img;
    ImageF out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double u = img.width > 1 ? static_cast<double>(x) / (img.width - 1) : 0.5;
            out.at(x, y) = img.at(x, y) * (1.0 + strength * (u - 0.5));
        }
    }
    return out;
}

ImageF gamma_curve(const ImageF& img, double gamma) {
    if (gamma <= 0.0) throw std::invalid_argument("gamma must be > 0");
    if (gamma == 1.0) return img;
    ImageF out(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        double v = std::clamp(img.pixels[i], 0.0, 255.0);
        out.pixels[i] = 255.0 * std::pow(v / 255.0, gamma);
    }
    return out;
}

ImageF resample_area(const ImageF& img, int w, int h) {
    if (w == img.width && h == img.height) return img;
    ImageF out(w, h);
    double sx = static_cast<double>(img.width) / w;
    double sy = static_cast<double>(img.height) / h;
    for (int oy = 0; oy < h; ++oy) {
        double y0 = oy * sy, y1 = (oy + 1) * sy;
        for (int ox = 0; ox < w; ++ox) {
            double x0 = ox * sx, x1 = (ox + 1) * sx;
            double acc = 0.0;
            for (int y = static_cast<int>(std::floor(y0)); y < static_cast<int>(std::ceil(y1)); ++y) {
                double wy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
                if (wy <= 0) continue;
                for (int x = static_cast<int>(std::floor(x0)); x < static_cast<int>(std::ceil(x1)); ++x) {
                    double wx = std::min<double>(x + 1, x1) - std::max<double>(x, x0);
                    if (wx <= 0) continue;
                    acc += wx * wy * img.at(std::min(x, img.width - 1), std::min(y, img.height - 1));
                }
            }
            out.at(ox, oy) = acc / (sx * sy);
        }
    }
    return out;
}

}  // namespace sgq
