#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sgq/image.hpp"

namespace sgq {

enum class FeatureKind { brisque36, lbp10 };

std::string to_string(FeatureKind k);
FeatureKind feature_kind_from_string(const std::string& s);
int feature_dim(FeatureKind k);

struct FeatureVector {
    FeatureKind kind = FeatureKind::brisque36;
    std::vector<double> values;
};

// Asymmetric generalized Gaussian fit; for the symmetric (zero-mean) variant
// sigma_l == sigma_r and mean_shift == 0.
struct AggdParams {
    double alpha = 2.0;
    double sigma_l = 1.0;
    double sigma_r = 1.0;
    double mean_shift = 0.0;
};

// Mean-subtracted contrast-normalized coefficients: (I - mu) / (sigma + 1)
// with mu, sigma from a 7x7 Gaussian window (std 7/6), border weights
// renormalized over the in-bounds pixels. Input on the 0-255 scale.
ImageF mscn(const ImageF& img);

// Moment-matching AGGD estimator; alpha solved by bisection on [0.05, 10].
AggdParams aggd_fit(std::span<const double> samples);
// Symmetric GGD fit (mean fixed at 0).
AggdParams ggd_fit(std::span<const double> samples);

// 36-D BRISQUE-style vector: per scale (original, 2x box-downsampled),
// GGD(alpha, sigma) of the MSCN map, then AGGD(alpha, mean_shift, sigma_l,
// sigma_r) of the H, V, D1, D2 neighbor products. Throws NumericError with
// the tag on degenerate (zero-variance) input.
FeatureVector brisque_features(const Image& img, const std::string& tag = "");

// Rotation-invariant uniform LBP (riu2), P neighbors on a radius-R circle,
// bilinear sampling, bins weighted by Sobel gradient magnitude. 10 bins for
// P=8, normalized to sum 1; falls back to unweighted counts when the total
// gradient weight is below 1e-6.
FeatureVector lbp_features(const Image& img, int P = 8, double R = 8.0);

// Maximizes between-class variance over the split [0..t] / [t+1..255];
// ties break toward the lower threshold.
int otsu_threshold(const std::array<std::uint64_t, 256>& histogram);

// Sobel 3x3 magnitude with replicate padding (unnormalized kernels).
ImageF gradient_magnitude(const ImageF& img);

// --- feature cache: header (magic SGFQ) + float32 rows + frame_id index ---
void save_feature_cache(const std::filesystem::path& path, FeatureKind kind,
                        const std::vector<std::string>& frame_ids, const std::vector<std::vector<double>>& rows);
bool load_feature_cache(const std::filesystem::path& path, FeatureKind kind, std::vector<std::string>& frame_ids,
                        std::vector<std::vector<double>>& rows);

}  // namespace sgq
