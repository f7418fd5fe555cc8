#include "sgq/dataset.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sgq/digest.hpp"
#include "sgq/rng.hpp"

namespace sgq {

using nlohmann::json;

void DatasetConfig::validate() const {
    if (graphics < 1) throw ConfigError("dataset.graphics must be >= 1");
    if (sessions_per_graphic < 1) throw ConfigError("dataset.sessions_per_graphic must be >= 1");
    if (frames_per_session < 1) throw ConfigError("dataset.frames_per_session must be >= 1");
    if (domains.empty()) throw ConfigError("dataset.domains must be non-empty");
    if (split_train < 0 || split_val < 0 || split_test < 0 ||
        std::abs(split_train + split_val + split_test - 1.0) > 1e-9)
        throw ConfigError("dataset split fractions must be nonnegative and sum to 1");
    if (grid_cells < 9) throw ConfigError("dataset.grid_cells must be >= 9");
    if (cell_size_px < 2) throw ConfigError("dataset.cell_size_px must be >= 2");
    if (density < 0.0 || density > 1.0) throw ConfigError("dataset.density must be in [0,1]");
}

namespace {

json config_to_json(const DatasetConfig& c) {
    json domains = json::array();
    for (auto d : c.domains) domains.push_back(to_string(d));
    return json{{"graphics", c.graphics},
                {"sessions_per_graphic", c.sessions_per_graphic},
                {"frames_per_session", c.frames_per_session},
                {"domains", domains},
                {"split", {c.split_train, c.split_val, c.split_test}},
                {"seed", c.seed},
                {"grid_cells", c.grid_cells},
                {"cell_size_px", c.cell_size_px},
                {"density", c.density}};
}

DatasetConfig config_from_json(const json& j) {
    DatasetConfig c;
    c.graphics = j.at("graphics").get<int>();
    c.sessions_per_graphic = j.at("sessions_per_graphic").get<int>();
    c.frames_per_session = j.at("frames_per_session").get<int>();
    c.domains.clear();
    for (const auto& d : j.at("domains")) c.domains.push_back(print_domain_from_string(d.get<std::string>()));
    auto split = j.at("split");
    c.split_train = split.at(0).get<double>();
    c.split_val = split.at(1).get<double>();
    c.split_test = split.at(2).get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.grid_cells = j.at("grid_cells").get<int>();
    c.cell_size_px = j.at("cell_size_px").get<int>();
    c.density = j.at("density").get<double>();
    return c;
}

std::string pad3(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03d", i);
    return buf;
}

std::string pad2(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02d", i);
    return buf;
}

Trajectory session_kind(int graphic_index, int session_index) {
    // session 0 is always a focus sweep; the rest cycle the other scenarios
    if (session_index == 0) return Trajectory::focus_sweep;
    static const Trajectory rest[] = {Trajectory::steady, Trajectory::focus_hunt, Trajectory::glare_pass};
    return rest[(graphic_index + session_index - 1) % 3];
}

}  // namespace

std::string config_hash(const DatasetConfig& cfg) {
    return sha256_hex(config_to_json(cfg).dump());
}

DatasetManifest build_dataset(const DatasetConfig& cfg, const std::filesystem::path& dir) {
    cfg.validate();
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir / "refs", ec);
    fs::create_directories(dir / "images", ec);
    if (!fs::exists(dir / "images")) throw DataError("cannot create dataset directory: " + dir.string());

    DatasetManifest manifest;
    manifest.config_hash = config_hash(cfg);

    // per-graphic split assignment by seeded shuffle
    std::vector<int> order(static_cast<std::size_t>(cfg.graphics));
    for (int i = 0; i < cfg.graphics; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng shuffle_rng(sub_seed(cfg.seed, "splits"));
    shuffle_rng.shuffle(order);
    int n_train = static_cast<int>(std::llround(cfg.split_train * cfg.graphics));
    int n_val = static_cast<int>(std::llround(cfg.split_val * cfg.graphics));
    n_train = std::min(n_train, cfg.graphics);
    n_val = std::min(n_val, cfg.graphics - n_train);
    std::vector<Split> split_of(static_cast<std::size_t>(cfg.graphics));
    for (int rank = 0; rank < cfg.graphics; ++rank) {
        Split s = rank < n_train ? Split::train : rank < n_train + n_val ? Split::val : Split::test;
        split_of[static_cast<std::size_t>(order[static_cast<std::size_t>(rank)])] = s;
    }

    std::vector<SessionRecord> session_records;
    for (int g = 0; g < cfg.graphics; ++g) {
        std::string gid = "g" + pad3(g);
        DigitalReference ref =
            generate_reference(sub_seed(cfg.seed, "graphic/" + gid), cfg.grid_cells, cfg.cell_size_px, cfg.density);
        ref.graphic_id = gid;
        save_reference(dir / "refs", ref);

        for (PrintDomain domain : cfg.domains) {
            PrintDomainModel model = domain_preset(domain);
            for (int si = 0; si < cfg.sessions_per_graphic; ++si) {
                std::string session_id = gid + "-" + to_string(domain) + "-s" + std::to_string(si);
                Trajectory kind = session_kind(g, si);
                ScanSession session =
                    generate_session(ref, model, kind, cfg.frames_per_session, sub_seed(cfg.seed, "session/" + session_id));
                session.session_id = session_id;

                SessionRecord record{session_id, gid, domain, kind, {}};
                for (std::size_t fi = 0; fi < session.frames.size(); ++fi) {
                    CapturedFrame& frame = session.frames[fi];
                    frame.session_id = session_id;
                    frame.frame_id = session_id + "-f" + pad2(static_cast<int>(fi));
                    std::string rel = "images/" + frame.frame_id + ".pgm";
                    write_pgm(dir / rel, frame.image);
                    manifest.entries.push_back(
                        {frame.frame_id, gid, session_id, domain, split_of[static_cast<std::size_t>(g)], rel});
                    record.frame_ids.push_back(frame.frame_id);
                }
                session_records.push_back(std::move(record));
            }
        }
    }

    {
        std::ofstream f(dir / "manifest.jsonl");
        for (const auto& e : manifest.entries) {
            json j{{"frame_id", e.frame_id},      {"graphic_id", e.graphic_id}, {"session_id", e.session_id},
                   {"domain_id", to_string(e.domain_id)}, {"split", to_string(e.split)},  {"image_path", e.image_path}};
            f << j.dump() << "\n";
        }
        if (!f) throw DataError("cannot write manifest: " + (dir / "manifest.jsonl").string());
    }
    {
        std::ofstream f(dir / "sessions.jsonl");
        for (const auto& r : session_records) {
            json j{{"session_id", r.session_id},
                   {"graphic_id", r.graphic_id},
                   {"domain_id", to_string(r.domain_id)},
                   {"trajectory_kind", to_string(r.kind)},
                   {"frame_ids", r.frame_ids}};
            f << j.dump() << "\n";
        }
    }
    {
        std::ofstream f(dir / "config.json");
        f << config_to_json(cfg).dump(2) << "\n";
    }
    {
        json meta{{"config_hash", manifest.config_hash}, {"n_entries", manifest.entries.size()}};
        std::ofstream f(dir / "manifest.meta.json");
        f << meta.dump(2) << "\n";
    }

    split_by_graphic(manifest);  // enforce the hygiene invariant before returning
    return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& dir) {
    std::ifstream f(dir / "manifest.jsonl");
    if (!f) throw DataError("missing manifest: " + (dir / "manifest.jsonl").string());
    DatasetManifest manifest;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        manifest.entries.push_back({j.at("frame_id").get<std::string>(), j.at("graphic_id").get<std::string>(),
                                    j.at("session_id").get<std::string>(),
                                    print_domain_from_string(j.at("domain_id").get<std::string>()),
                                    split_from_string(j.at("split").get<std::string>()),
                                    j.at("image_path").get<std::string>()});
    }
    std::ifstream meta(dir / "manifest.meta.json");
    if (!meta) throw DataError("missing manifest.meta.json in " + dir.string());
    manifest.config_hash = json::parse(meta).at("config_hash").get<std::string>();
    return manifest;
}

std::vector<SessionRecord> load_sessions(const std::filesystem::path& dir) {
    std::ifstream f(dir / "sessions.jsonl");
    if (!f) throw DataError("missing sessions.jsonl in " + dir.string());
    std::vector<SessionRecord> records;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        records.push_back({j.at("session_id").get<std::string>(), j.at("graphic_id").get<std::string>(),
                           print_domain_from_string(j.at("domain_id").get<std::string>()),
                           trajectory_from_string(j.at("trajectory_kind").get<std::string>()),
                           j.at("frame_ids").get<std::vector<std::string>>()});
    }
    return records;
}

DatasetConfig load_dataset_config(const std::filesystem::path& dir) {
    std::ifstream f(dir / "config.json");
    if (!f) throw DataError("missing config.json in " + dir.string());
    return config_from_json(json::parse(f));
}

Image load_frame_image(const std::filesystem::path& dir, const ManifestEntry& entry) {
    return read_pgm(dir / entry.image_path);
}

std::map<std::string, Split> split_by_graphic(const DatasetManifest& manifest) {
    std::map<std::string, Split> result;
    for (const auto& e : manifest.entries) {
        auto [it, inserted] = result.emplace(e.graphic_id, e.split);
        if (!inserted && it->second != e.split)
            throw DataError("split hygiene violation: graphic " + e.graphic_id + " spans multiple splits");
    }
    return result;
}

}  // namespace sgq
