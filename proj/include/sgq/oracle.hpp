#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sgq/dataset.hpp"
#include "sgq/graphic.hpp"
#include "sgq/image.hpp"

namespace sgq {

// Reference-based verification score s in [0,1]: per-cell Pearson correlation
// of the capture against the +/-1-mapped secure-graphic bits, maximized over
// integer and half-pixel shifts in [-2,2]^2, clamped at 0.
double oracle_score(const Image& frame, const DigitalReference& ref);

struct LabeledSample {
    std::string frame_id;
    double s = 0.0;
    bool high_quality = false;  // s >= tau
};

// tau = the `percentile` quantile (by nearest-rank) of the given scores.
double choose_tau_percentile(std::vector<double> scores, double percentile);

struct LabelSet {
    std::vector<LabeledSample> samples;  // manifest order
    double tau = 0.0;
    std::string config_hash;

    const LabeledSample& by_frame(const std::string& frame_id) const;

  private:
    mutable std::map<std::string, std::size_t> index_;
};

// Scores every manifest frame against its reference and labels at tau.
LabelSet label_dataset(const std::filesystem::path& dir, const DatasetManifest& manifest,
                       const std::map<std::string, DigitalReference>& refs, double tau);

void save_labels(const std::filesystem::path& dir, const LabelSet& labels);
LabelSet load_labels(const std::filesystem::path& dir);

}  // namespace sgq
