#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sgq/capture.hpp"
#include "sgq/common.hpp"

namespace sgq {

struct DatasetConfig {
    int graphics = 60;
    int sessions_per_graphic = 2;
    int frames_per_session = 10;
    std::vector<PrintDomain> domains = {PrintDomain::DomainA_digital, PrintDomain::DomainB_offset};
    double split_train = 0.6;
    double split_val = 0.2;
    double split_test = 0.2;
    std::uint64_t seed = 0;
    int grid_cells = 33;
    int cell_size_px = 4;
    double density = 0.5;

    void validate() const;
};

struct ManifestEntry {
    std::string frame_id;
    std::string graphic_id;
    std::string session_id;
    PrintDomain domain_id = PrintDomain::DomainA_digital;
    Split split = Split::train;
    std::string image_path;  // relative to the dataset directory
};

struct SessionRecord {
    std::string session_id;
    std::string graphic_id;
    PrintDomain domain_id = PrintDomain::DomainA_digital;
    Trajectory kind = Trajectory::steady;
    std::vector<std::string> frame_ids;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::string config_hash;
};

// Generates references, prints, sessions and frames under `dir`:
//   refs/<graphic_id>.{pgm,json}   images/<frame_id>.pgm
//   manifest.jsonl  sessions.jsonl  manifest.meta.json  config.json
// Splits are assigned per graphic_id by a seeded shuffle.
DatasetManifest build_dataset(const DatasetConfig& cfg, const std::filesystem::path& dir);

DatasetManifest load_manifest(const std::filesystem::path& dir);
std::vector<SessionRecord> load_sessions(const std::filesystem::path& dir);
DatasetConfig load_dataset_config(const std::filesystem::path& dir);

// Canonicalized SHA-256 of the dataset config document.
std::string config_hash(const DatasetConfig& cfg);

Image load_frame_image(const std::filesystem::path& dir, const ManifestEntry& entry);

// split value shared by all entries of each graphic; throws on violation
std::map<std::string, Split> split_by_graphic(const DatasetManifest& manifest);

}  // namespace sgq
