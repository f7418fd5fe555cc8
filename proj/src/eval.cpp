#include "sgq/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "sgq/common.hpp"

namespace sgq {

using nlohmann::json;

double fnmr_at(std::span<const ScoredSample> samples, double sigma) {
    std::size_t accepted = 0, low_accepted = 0;
    for (const auto& s : samples) {
        if (s.q >= sigma) {
            ++accepted;
            if (!s.high) ++low_accepted;
        }
    }
    if (accepted == 0) return 0.0;
    return static_cast<double>(low_accepted) / static_cast<double>(accepted);
}

double isrr_at(std::span<const ScoredSample> samples, double sigma) {
    std::size_t high = 0, high_rejected = 0;
    for (const auto& s : samples) {
        if (s.high) {
            ++high;
            if (s.q < sigma) ++high_rejected;
        }
    }
    if (high == 0) return 0.0;
    return static_cast<double>(high_rejected) / static_cast<double>(high);
}

EdcCurve edc_curve(std::span<const ScoredSample> samples, const std::string& model_id) {
    if (samples.empty()) throw std::invalid_argument("edc_curve: empty sample set");
    EdcCurve curve;
    curve.model_id = model_id;
    curve.n_samples = samples.size();

    std::vector<double> qs;
    qs.reserve(samples.size());
    for (const auto& s : samples) qs.push_back(s.q);
    std::sort(qs.begin(), qs.end());
    qs.erase(std::unique(qs.begin(), qs.end()), qs.end());

    double n = static_cast<double>(samples.size());
    for (double sigma : qs) {
        std::size_t discarded = 0;
        for (const auto& s : samples) discarded += s.q < sigma;
        curve.points.push_back({sigma, static_cast<double>(discarded) / n, fnmr_at(samples, sigma), isrr_at(samples, sigma)});
    }
    // terminal all-discard sentinel
    double inf = std::numeric_limits<double>::infinity();
    curve.points.push_back({inf, 1.0, fnmr_at(samples, inf), isrr_at(samples, inf)});
    return curve;
}

EdcCurve ideal_curve(std::span<const ScoredSample> samples) {
    std::vector<ScoredSample> ideal(samples.begin(), samples.end());
    for (auto& s : ideal) s.q = s.s;
    EdcCurve c = edc_curve(ideal, "ideal");
    return c;
}

double pauc(const EdcCurve& curve, ErrorMetric which, double lo, double hi) {
    if (curve.points.empty()) throw std::invalid_argument("pauc: empty curve");
    if (!(hi > lo)) throw std::invalid_argument("pauc: empty discard range");
    // piecewise-constant, right-continuous in discard: error holds from each
    // point's discard up to the next point's
    double area = 0.0;
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        double d0 = curve.points[i].discard;
        double d1 = i + 1 < curve.points.size() ? curve.points[i + 1].discard : 1.0;
        double e = which == ErrorMetric::fnmr ? curve.points[i].fnmr : curve.points[i].isrr;
        double a = std::max(d0, lo);
        double b = std::min(d1, hi);
        if (b > a) area += e * (b - a);
    }
    // a curve always starts at discard 0; if hi exceeds the last discard the
    // final value extends (the terminal point has discard 1, so no gap)
    return area / (hi - lo);
}

PaucReport make_pauc_report(const std::string& model_id, std::span<const ScoredSample> samples, double lo, double hi) {
    PaucReport r;
    r.model_id = model_id;
    r.range_lo = lo;
    r.range_hi = hi;
    r.n_samples = samples.size();
    EdcCurve model = edc_curve(samples, model_id);
    EdcCurve ideal = ideal_curve(samples);
    r.fnmr_pauc = pauc(model, ErrorMetric::fnmr, lo, hi);
    r.isrr_pauc = pauc(model, ErrorMetric::isrr, lo, hi);
    r.ideal_fnmr_pauc = pauc(ideal, ErrorMetric::fnmr, lo, hi);
    r.ideal_isrr_pauc = pauc(ideal, ErrorMetric::isrr, lo, hi);
    r.fnmr_delta = r.fnmr_pauc - r.ideal_fnmr_pauc;
    r.isrr_delta = r.isrr_pauc - r.ideal_isrr_pauc;
    return r;
}

void write_curve_csv(const std::filesystem::path& path, const EdcCurve& curve) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write curve: " + path.string());
    f << "sigma,discard,fnmr,isrr\n";
    char buf[160];
    for (const auto& p : curve.points) {
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g\n", p.sigma, p.discard, p.fnmr, p.isrr);
        f << buf;
    }
}

void write_report_json(const std::filesystem::path& path, const PaucReport& r, const std::string& config_hash) {
    json j{{"model_id", r.model_id},
           {"n_samples", r.n_samples},
           {"range", {r.range_lo, r.range_hi}},
           {"fnmr_pauc", r.fnmr_pauc},
           {"isrr_pauc", r.isrr_pauc},
           {"ideal_fnmr_pauc", r.ideal_fnmr_pauc},
           {"ideal_isrr_pauc", r.ideal_isrr_pauc},
           {"fnmr_delta_pauc", r.fnmr_delta},
           {"isrr_delta_pauc", r.isrr_delta},
           // raw = not normalized by the range width, for comparability
           {"fnmr_pauc_raw", r.fnmr_pauc * (r.range_hi - r.range_lo)},
           {"isrr_pauc_raw", r.isrr_pauc * (r.range_hi - r.range_lo)},
           {"config_hash", config_hash}};
    std::ofstream f(path);
    if (!f) throw DataError("cannot write report: " + path.string());
    f << j.dump(2) << "\n";
}

PaucReport read_report_json(const std::filesystem::path& path, std::string* config_hash) {
    std::ifstream f(path);
    if (!f) throw DataError("missing report: " + path.string());
    json j = json::parse(f);
    PaucReport r;
    r.model_id = j.at("model_id").get<std::string>();
    r.n_samples = j.at("n_samples").get<std::size_t>();
    r.range_lo = j.at("range").at(0).get<double>();
    r.range_hi = j.at("range").at(1).get<double>();
    r.fnmr_pauc = j.at("fnmr_pauc").get<double>();
    r.isrr_pauc = j.at("isrr_pauc").get<double>();
    r.ideal_fnmr_pauc = j.at("ideal_fnmr_pauc").get<double>();
    r.ideal_isrr_pauc = j.at("ideal_isrr_pauc").get<double>();
    r.fnmr_delta = j.at("fnmr_delta_pauc").get<double>();
    r.isrr_delta = j.at("isrr_delta_pauc").get<double>();
    if (config_hash) *config_hash = j.value("config_hash", "");
    return r;
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw std::invalid_argument("pearson: size mismatch");
    double n = static_cast<double>(a.size());
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sa += a[i];
        sb += b[i];
        saa += a[i] * a[i];
        sbb += b[i] * b[i];
        sab += a[i] * b[i];
    }
    double cov = sab - sa * sb / n;
    double va = saa - sa * sa / n;
    double vb = sbb - sb * sb / n;
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;  // average rank, 1-based
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman_correlation(std::span<const double> a, std::span<const double> b) {
    auto ra = ranks(a);
    auto rb = ranks(b);
    return pearson_correlation(ra, rb);
}

}  // namespace sgq
