#include "sgq/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sgq/common.hpp"

namespace sgq {

using nlohmann::json;

namespace {

// Pearson correlation of per-cell means against the +/-1 bit map for one
// candidate shift. Sampling is bilinear with replicate borders, so integer
// shifts reduce to exact pixel lookups.
double shifted_correlation(const ImageF& frame, const DigitalReference& ref, double dx, double dy) {
    const CellRect& sg = ref.sg_region;
    int csp = ref.cell_size_px;
    std::size_t n = static_cast<std::size_t>(sg.w) * sg.h;

    double sum_a = 0, sum_b = 0, sum_aa = 0, sum_bb = 0, sum_ab = 0;
    for (int cy = 0; cy < sg.h; ++cy) {
        for (int cx = 0; cx < sg.w; ++cx) {
            double acc = 0.0;
            int px0 = (sg.x0 + cx) * csp;
            int py0 = (sg.y0 + cy) * csp;
            for (int py = 0; py < csp; ++py)
                for (int px = 0; px < csp; ++px) acc += bilinear_at(frame, px0 + px + dx, py0 + py + dy);
            double a = acc / (csp * csp);
            double b = ref.bit(sg.x0 + cx, sg.y0 + cy) ? 1.0 : -1.0;
            sum_a += a;
            sum_b += b;
            sum_aa += a * a;
            sum_bb += b * b;
            sum_ab += a * b;
        }
    }
    double inv_n = 1.0 / static_cast<double>(n);
    double cov = sum_ab - sum_a * sum_b * inv_n;
    double var_a = sum_aa - sum_a * sum_a * inv_n;
    double var_b = sum_bb - sum_b * sum_b * inv_n;
    if (var_a <= 1e-12 || var_b <= 1e-12) return 0.0;
    return cov / std::sqrt(var_a * var_b);
}

}  // namespace

double oracle_score(const Image& frame, const DigitalReference& ref) {
    int expected = ref.grid_cells * ref.cell_size_px;
    if (frame.width != expected || frame.height != expected)
        throw std::invalid_argument("frame dimensions do not match the rendered reference");
    ImageF f = to_float(frame);
    double best = -1.0;
    for (int iy = -4; iy <= 4; ++iy) {
        for (int ix = -4; ix <= 4; ++ix) {
            best = std::max(best, shifted_correlation(f, ref, 0.5 * ix, 0.5 * iy));
        }
    }
    return std::clamp(best, 0.0, 1.0);
}

double choose_tau_percentile(std::vector<double> scores, double percentile) {
    if (scores.empty()) throw DataError("cannot choose tau from an empty score set");
    if (percentile <= 0.0 || percentile >= 1.0) throw std::invalid_argument("percentile must be in (0,1)");
    std::sort(scores.begin(), scores.end());
    auto k = static_cast<std::size_t>(std::llround(percentile * static_cast<double>(scores.size())));
    k = std::min(k, scores.size() - 1);
    double tau = scores[k];
    if (tau <= 0.0 || tau >= 1.0)
        throw NumericError("computed tau outside (0,1); the score distribution is degenerate");
    return tau;
}

const LabeledSample& LabelSet::by_frame(const std::string& frame_id) const {
    if (index_.empty())
        for (std::size_t i = 0; i < samples.size(); ++i) index_.emplace(samples[i].frame_id, i);
    auto it = index_.find(frame_id);
    if (it == index_.end()) throw DataError("no label for frame " + frame_id);
    return samples[it->second];
}

LabelSet label_dataset(const std::filesystem::path& dir, const DatasetManifest& manifest,
                       const std::map<std::string, DigitalReference>& refs, double tau) {
    if (tau <= 0.0 || tau >= 1.0) throw std::invalid_argument("tau must be in (0,1)");
    LabelSet labels;
    labels.tau = tau;
    labels.config_hash = manifest.config_hash;
    labels.samples.reserve(manifest.entries.size());
    for (const auto& entry : manifest.entries) {
        auto it = refs.find(entry.graphic_id);
        if (it == refs.end()) throw DataError("missing digital reference for graphic " + entry.graphic_id);
        double s = oracle_score(load_frame_image(dir, entry), it->second);
        labels.samples.push_back({entry.frame_id, s, s >= tau});
    }
    return labels;
}

void save_labels(const std::filesystem::path& dir, const LabelSet& labels) {
    {
        std::ofstream f(dir / "labels.jsonl");
        if (!f) throw DataError("cannot write labels.jsonl in " + dir.string());
        for (const auto& s : labels.samples) {
            json j{{"frame_id", s.frame_id}, {"s", s.s}, {"label", s.high_quality ? "high_quality" : "low_quality"}};
            f << j.dump() << "\n";
        }
    }
    std::size_t n_high = 0;
    for (const auto& s : labels.samples) n_high += s.high_quality ? 1 : 0;
    json meta{{"tau", labels.tau},
              {"config_hash", labels.config_hash},
              {"n_samples", labels.samples.size()},
              {"n_high_quality", n_high},
              {"n_low_quality", labels.samples.size() - n_high}};
    std::ofstream f(dir / "labels.meta.json");
    f << meta.dump(2) << "\n";
}

LabelSet load_labels(const std::filesystem::path& dir) {
    std::ifstream meta(dir / "labels.meta.json");
    if (!meta) throw DataError("missing labels file: " + (dir / "labels.meta.json").string() +
                               " (run `label` on this dataset first)");
    json m = json::parse(meta);
    LabelSet labels;
    labels.tau = m.at("tau").get<double>();
    labels.config_hash = m.at("config_hash").get<std::string>();
    std::ifstream f(dir / "labels.jsonl");
    if (!f) throw DataError("missing labels file: " + (dir / "labels.jsonl").string());
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        labels.samples.push_back(
            {j.at("frame_id").get<std::string>(), j.at("s").get<double>(), j.at("label").get<std::string>() == "high_quality"});
    }
    return labels;
}

}  // namespace sgq
