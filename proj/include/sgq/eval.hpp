#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sgq {

struct ScoredSample {
    std::string frame_id;
    double q = 0.0;  // predicted
    double s = 0.0;  // oracle
    bool high = false;
};

struct EdcPoint {
    double sigma = 0.0;
    double discard = 0.0;
    double fnmr = 0.0;
    double isrr = 0.0;
};

struct EdcCurve {
    std::string model_id;
    std::size_t n_samples = 0;
    std::vector<EdcPoint> points;
};

enum class ErrorMetric { fnmr, isrr };

// FNMR(sigma) = |{low & q >= sigma}| / |{q >= sigma}|; 0 when nothing is
// accepted (no accepted samples means no false non-matches).
double fnmr_at(std::span<const ScoredSample> samples, double sigma);

// ISRR(sigma) = |{high & q < sigma}| / |{high}|.
double isrr_at(std::span<const ScoredSample> samples, double sigma);

// Operating points at every distinct q (ascending) plus a terminal
// all-discard point. Ties share a point: the metrics use strict `q < sigma`
// for discard, so every achievable operating point appears exactly once.
EdcCurve edc_curve(std::span<const ScoredSample> samples, const std::string& model_id = "");

// Same sweep with q replaced by the oracle score s.
EdcCurve ideal_curve(std::span<const ScoredSample> samples);

// Step integration of error vs discard over [lo, hi], normalized by the
// range width so a constant error integrates to itself.
double pauc(const EdcCurve& curve, ErrorMetric which, double lo = 0.0, double hi = 0.70);

struct PaucReport {
    std::string model_id;
    double fnmr_pauc = 0.0, isrr_pauc = 0.0;    // normalized by the range width
    double fnmr_delta = 0.0, isrr_delta = 0.0;  // excess over the ideal observer
    double ideal_fnmr_pauc = 0.0, ideal_isrr_pauc = 0.0;
    double range_lo = 0.0, range_hi = 0.70;
    std::size_t n_samples = 0;
};

PaucReport make_pauc_report(const std::string& model_id, std::span<const ScoredSample> samples, double lo = 0.0,
                            double hi = 0.70);

void write_curve_csv(const std::filesystem::path& path, const EdcCurve& curve);
void write_report_json(const std::filesystem::path& path, const PaucReport& report, const std::string& config_hash);
PaucReport read_report_json(const std::filesystem::path& path, std::string* config_hash = nullptr);

// --- small rank statistics used across reports and tests ---
double pearson_correlation(std::span<const double> a, std::span<const double> b);
double spearman_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace sgq
