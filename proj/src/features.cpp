#include "sgq/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sgq/common.hpp"

namespace sgq {

using nlohmann::json;

std::string to_string(FeatureKind k) {
    return k == FeatureKind::brisque36 ? "brisque36" : "lbp10";
}

FeatureKind feature_kind_from_string(const std::string& s) {
    if (s == "brisque36") return FeatureKind::brisque36;
    if (s == "lbp10") return FeatureKind::lbp10;
    throw DataError("unknown feature kind: " + s);
}

int feature_dim(FeatureKind k) {
    return k == FeatureKind::brisque36 ? 36 : 10;
}

// ---------------------------------------------------------------- MSCN ----

ImageF mscn(const ImageF& img) {
    if (img.width < 16 || img.height < 16) throw std::invalid_argument("mscn needs at least a 16x16 image");
    constexpr int radius = 3;  // 7x7 window
    const double window_std = 7.0 / 6.0;
    double w[2 * radius + 1];
    for (int i = -radius; i <= radius; ++i) w[i + radius] = std::exp(-0.5 * (i / window_std) * (i / window_std));

    // separable weighted sums of I and I^2 with border renormalization
    auto pass = [&](const ImageF& src, bool horizontal) {
        ImageF dst(src.width, src.height);
        int n = horizontal ? src.width : src.height;
        for (int y = 0; y < src.height; ++y) {
            for (int x = 0; x < src.width; ++x) {
                int i = horizontal ? x : y;
                double acc = 0.0, wsum = 0.0;
                int lo = std::max(0, i - radius), hi = std::min(n - 1, i + radius);
                for (int j = lo; j <= hi; ++j) {
                    double wj = w[j - i + radius];
                    acc += wj * (horizontal ? src.at(j, y) : src.at(x, j));
                    wsum += wj;
                }
                dst.at(x, y) = acc / wsum;
            }
        }
        return dst;
    };

    ImageF sq(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) sq.pixels[i] = img.pixels[i] * img.pixels[i];
    ImageF mu = pass(pass(img, true), false);
    ImageF musq = pass(pass(sq, true), false);

    ImageF out(img.width, img.height);
    constexpr double C = 1.0;
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        double m = mu.pixels[i];
        double var = std::max(0.0, musq.pixels[i] - m * m);
        out.pixels[i] = (img.pixels[i] - m) / (std::sqrt(var) + C);
    }
    return out;
}

// ---------------------------------------------------------------- AGGD ----

namespace {

// r(alpha) = Gamma(2/a)^2 / (Gamma(1/a) Gamma(3/a)), increasing on (0, 10]
double ggd_ratio(double alpha) {
    double lg1 = std::lgamma(1.0 / alpha);
    double lg2 = std::lgamma(2.0 / alpha);
    double lg3 = std::lgamma(3.0 / alpha);
    return std::exp(2.0 * lg2 - lg1 - lg3);
}

double solve_alpha(double target) {
    double lo = 0.05, hi = 10.0;
    if (target <= ggd_ratio(lo)) return lo;
    if (target >= ggd_ratio(hi)) return hi;
    while (hi - lo > 1e-6) {
        double mid = 0.5 * (lo + hi);
        (ggd_ratio(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

void check_samples(std::span<const double> samples) {
    if (samples.size() < 100) throw std::invalid_argument("need at least 100 samples for a GGD fit");
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (double v : samples) var += (v - mean) * (v - mean);
    if (var / static_cast<double>(samples.size()) < 1e-12) throw NumericError("degenerate variance in GGD fit");
}

}  // namespace

AggdParams aggd_fit(std::span<const double> samples) {
    check_samples(samples);
    double sum_sq_l = 0.0, sum_sq_r = 0.0, sum_abs = 0.0, sum_sq = 0.0;
    std::size_t n_l = 0, n_r = 0;
    for (double v : samples) {
        if (v < 0.0) {
            sum_sq_l += v * v;
            ++n_l;
        } else if (v > 0.0) {
            sum_sq_r += v * v;
            ++n_r;
        }
        sum_abs += std::abs(v);
        sum_sq += v * v;
    }
    double n = static_cast<double>(samples.size());
    double sigma_l = n_l ? std::sqrt(sum_sq_l / static_cast<double>(n_l)) : 0.0;
    double sigma_r = n_r ? std::sqrt(sum_sq_r / static_cast<double>(n_r)) : 0.0;
    if (sigma_l <= 0.0) sigma_l = 1e-12;
    if (sigma_r <= 0.0) sigma_r = 1e-12;

    double gamma_hat = sigma_l / sigma_r;
    double r_hat = (sum_abs / n) * (sum_abs / n) / (sum_sq / n);
    double r_norm = r_hat * (gamma_hat * gamma_hat * gamma_hat + 1.0) * (gamma_hat + 1.0) /
                    ((gamma_hat * gamma_hat + 1.0) * (gamma_hat * gamma_hat + 1.0));

    AggdParams p;
    p.alpha = solve_alpha(r_norm);
    p.sigma_l = sigma_l;
    p.sigma_r = sigma_r;
    double lg1 = std::lgamma(1.0 / p.alpha);
    double lg2 = std::lgamma(2.0 / p.alpha);
    double lg3 = std::lgamma(3.0 / p.alpha);
    // eta = (beta_r - beta_l) * Gamma(2/a)/Gamma(1/a), beta = sigma*sqrt(G(1/a)/G(3/a))
    p.mean_shift = (sigma_r - sigma_l) * std::exp(lg2 - lg1) * std::exp(0.5 * (lg1 - lg3));
    return p;
}

AggdParams ggd_fit(std::span<const double> samples) {
    check_samples(samples);
    double sum_abs = 0.0, sum_sq = 0.0;
    for (double v : samples) {
        sum_abs += std::abs(v);
        sum_sq += v * v;
    }
    double n = static_cast<double>(samples.size());
    double r_hat = (sum_abs / n) * (sum_abs / n) / (sum_sq / n);
    AggdParams p;
    p.alpha = solve_alpha(r_hat);
    p.sigma_l = p.sigma_r = std::sqrt(sum_sq / n);
    p.mean_shift = 0.0;
    return p;
}

// ------------------------------------------------------------- BRISQUE ----

namespace {

ImageF box_downsample2(const ImageF& img) {
    int w = img.width / 2, h = img.height / 2;
    ImageF out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(x, y) =
                0.25 * (img.at(2 * x, 2 * y) + img.at(2 * x + 1, 2 * y) + img.at(2 * x, 2 * y + 1) + img.at(2 * x + 1, 2 * y + 1));
    return out;
}

void scale_features(const ImageF& gray, std::vector<double>& out) {
    ImageF coeffs = mscn(gray);
    AggdParams g = ggd_fit(coeffs.pixels);
    out.push_back(g.alpha);
    out.push_back(g.sigma_l);

    // neighbor products: horizontal, vertical, main diagonal, anti-diagonal
    const int dx[4] = {1, 0, 1, -1};
    const int dy[4] = {0, 1, 1, 1};
    for (int d = 0; d < 4; ++d) {
        std::vector<double> prod;
        prod.reserve(coeffs.pixels.size());
        for (int y = 0; y < coeffs.height; ++y) {
            int ny = y + dy[d];
            if (ny < 0 || ny >= coeffs.height) continue;
            for (int x = std::max(0, -dx[d]); x < coeffs.width - std::max(0, dx[d]); ++x)
                prod.push_back(coeffs.at(x, y) * coeffs.at(x + dx[d], ny));
        }
        AggdParams a = aggd_fit(prod);
        out.push_back(a.alpha);
        out.push_back(a.mean_shift);
        out.push_back(a.sigma_l);
        out.push_back(a.sigma_r);
    }
}

}  // namespace

FeatureVector brisque_features(const Image& img, const std::string& tag) {
    if (img.width < 32 || img.height < 32) throw std::invalid_argument("brisque_features needs at least 32x32");
    FeatureVector fv;
    fv.kind = FeatureKind::brisque36;
    fv.values.reserve(36);
    try {
        ImageF gray = to_float(img);
        scale_features(gray, fv.values);
        scale_features(box_downsample2(gray), fv.values);
    } catch (const NumericError& e) {
        throw NumericError(std::string("feature extraction failed") + (tag.empty() ? "" : " for " + tag) + ": " + e.what());
    }
    return fv;
}

// ----------------------------------------------------------------- LBP ----

namespace {

struct Offset {
    double x, y;
};

// Neighbor table; for P divisible by 4 it is built from one octant so the
// coordinates are exactly symmetric under 90-degree rotation.
std::vector<Offset> circle_offsets(int P, double R) {
    std::vector<Offset> off(static_cast<std::size_t>(P));
    if (P % 4 == 0) {
        int q = P / 4;
        for (int k = 0; k <= q; ++k) {
            double a = 2.0 * 3.14159265358979323846 * k / P;
            double x = k == q ? 0.0 : R * std::cos(a);
            double y = k == 0 ? 0.0 : R * std::sin(a);
            off[static_cast<std::size_t>(k)] = {x, y};
            off[static_cast<std::size_t>((k + q) % P)] = {-y, x};
            off[static_cast<std::size_t>((k + 2 * q) % P)] = {-x, -y};
            off[static_cast<std::size_t>((k + 3 * q) % P)] = {y, -x};
        }
    } else {
        for (int k = 0; k < P; ++k) {
            double a = 2.0 * 3.14159265358979323846 * k / P;
            off[static_cast<std::size_t>(k)] = {R * std::cos(a), R * std::sin(a)};
        }
    }
    return off;
}

}  // namespace

FeatureVector lbp_features(const Image& img, int P, double R) {
    int margin = static_cast<int>(std::ceil(R));
    if (img.width < 2 * margin + 2 || img.height < 2 * margin + 2)
        throw std::invalid_argument("image too small for the requested LBP radius");

    ImageF gray = to_float(img);
    ImageF weight = gradient_magnitude(gray);
    auto offsets = circle_offsets(P, R);

    int bins = P + 2;
    std::vector<double> hist(static_cast<std::size_t>(bins), 0.0);
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);

    std::vector<int> bit(static_cast<std::size_t>(P));
    for (int y = margin; y < img.height - margin; ++y) {
        for (int x = margin; x < img.width - margin; ++x) {
            double center = gray.at(x, y);
            for (int k = 0; k < P; ++k)
                bit[static_cast<std::size_t>(k)] = bilinear_at(gray, x + offsets[static_cast<std::size_t>(k)].x,
                                                               y + offsets[static_cast<std::size_t>(k)].y) >= center;
            int transitions = 0, pop = 0;
            for (int k = 0; k < P; ++k) {
                transitions += bit[static_cast<std::size_t>(k)] != bit[static_cast<std::size_t>((k + 1) % P)];
                pop += bit[static_cast<std::size_t>(k)];
            }
            int b = transitions <= 2 ? pop : P + 1;
            hist[static_cast<std::size_t>(b)] += weight.at(x, y);
            counts[static_cast<std::size_t>(b)] += 1.0;
        }
    }

    double total = 0.0;
    for (double v : hist) total += v;
    if (total < 1e-6) {
        hist = counts;  // flat-image fallback
        total = 0.0;
        for (double v : hist) total += v;
    }
    FeatureVector fv;
    fv.kind = FeatureKind::lbp10;
    fv.values.resize(hist.size());
    for (std::size_t i = 0; i < hist.size(); ++i) fv.values[i] = hist[i] / total;
    return fv;
}

// ---------------------------------------------------------------- Otsu ----

int otsu_threshold(const std::array<std::uint64_t, 256>& histogram) {
    std::uint64_t total = 0;
    int nonempty = 0;
    double grand_sum = 0.0;
    for (int i = 0; i < 256; ++i) {
        total += histogram[static_cast<std::size_t>(i)];
        nonempty += histogram[static_cast<std::size_t>(i)] > 0;
        grand_sum += static_cast<double>(i) * static_cast<double>(histogram[static_cast<std::size_t>(i)]);
    }
    if (nonempty < 2) throw NumericError("otsu: histogram has fewer than two populated levels");

    double best = -1.0;
    int best_t = 0;
    std::uint64_t w0 = 0;
    double sum0 = 0.0;
    for (int t = 0; t < 255; ++t) {
        w0 += histogram[static_cast<std::size_t>(t)];
        sum0 += static_cast<double>(t) * static_cast<double>(histogram[static_cast<std::size_t>(t)]);
        std::uint64_t w1 = total - w0;
        if (w0 == 0 || w1 == 0) continue;
        double mu0 = sum0 / static_cast<double>(w0);
        double mu1 = (grand_sum - sum0) / static_cast<double>(w1);
        double between = static_cast<double>(w0) * static_cast<double>(w1) * (mu0 - mu1) * (mu0 - mu1);
        if (between > best) {
            best = between;
            best_t = t;
        }
    }
    return best_t;
}

// --------------------------------------------------------------- Sobel ----

ImageF gradient_magnitude(const ImageF& img) {
    ImageF out(img.width, img.height);
    auto px = [&](int x, int y) {
        x = std::clamp(x, 0, img.width - 1);
        y = std::clamp(y, 0, img.height - 1);
        return img.at(x, y);
    };
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double gx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
            double gy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
            out.at(x, y) = std::sqrt(gx * gx + gy * gy);
        }
    }
    return out;
}

// -------------------------------------------------------- feature cache ----

namespace {

template <typename T>
void write_le(std::ofstream& f, T v) {
    // build LE byte order explicitly
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
    f.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
bool read_le(std::ifstream& f, T& v) {
    unsigned char buf[sizeof(T)];
    if (!f.read(reinterpret_cast<char*>(buf), sizeof(T))) return false;
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) acc |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    v = static_cast<T>(acc);
    return true;
}

}  // namespace

void save_feature_cache(const std::filesystem::path& path, FeatureKind kind, const std::vector<std::string>& frame_ids,
                        const std::vector<std::vector<double>>& rows) {
    if (frame_ids.size() != rows.size()) throw std::invalid_argument("frame_ids/rows size mismatch");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write feature cache: " + path.string());
    f.write("SGFQ", 4);
    write_le<std::uint32_t>(f, 1);  // version
    write_le<std::uint8_t>(f, kind == FeatureKind::brisque36 ? 0 : 1);
    write_le<std::uint32_t>(f, static_cast<std::uint32_t>(rows.size()));
    write_le<std::uint32_t>(f, static_cast<std::uint32_t>(feature_dim(kind)));
    for (const auto& row : rows) {
        for (double v : row) {
            float fv = static_cast<float>(v);
            std::uint32_t bits;
            std::memcpy(&bits, &fv, 4);
            write_le<std::uint32_t>(f, bits);
        }
    }
    f << json(frame_ids).dump();
    if (!f) throw DataError("feature cache write failed: " + path.string());
}

bool load_feature_cache(const std::filesystem::path& path, FeatureKind kind, std::vector<std::string>& frame_ids,
                        std::vector<std::vector<double>>& rows) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return false;
    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, "SGFQ", 4) != 0) return false;
    std::uint32_t version = 0, count = 0, dim = 0;
    std::uint8_t kind_code = 0;
    if (!read_le(f, version) || version != 1) return false;
    if (!read_le(f, kind_code)) return false;
    if (kind_code != (kind == FeatureKind::brisque36 ? 0 : 1)) return false;
    if (!read_le(f, count) || !read_le(f, dim)) return false;
    if (dim != static_cast<std::uint32_t>(feature_dim(kind))) return false;
    rows.assign(count, std::vector<double>(dim));
    for (auto& row : rows) {
        for (auto& v : row) {
            std::uint32_t bits;
            if (!read_le(f, bits)) return false;
            float fv;
            std::memcpy(&fv, &bits, 4);
            v = fv;
        }
    }
    std::string tail((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    frame_ids = json::parse(tail).get<std::vector<std::string>>();
    return frame_ids.size() == rows.size();
}

}  // namespace sgq
