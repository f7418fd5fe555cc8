#include "sgq/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "sgq/digest.hpp"
#include "sgq/rng.hpp"
#include "sgq/svg.hpp"

namespace sgq {

using nlohmann::json;
namespace fs = std::filesystem;

// ------------------------------------------------------------- config ----

namespace {

void check_keys(const json& obj, const std::string& ctx, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError("config: " + ctx + " must be an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) throw ConfigError("config: unknown key '" + key + "' in " + ctx);
}

double require_in(const json& j, const std::string& ctx, const char* key, double lo, double hi) {
    double v = j.at(key).get<double>();
    if (!(v >= lo && v <= hi)) throw ConfigError("config: " + ctx + "." + key + " out of range");
    return v;
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(j, "top level", {"dataset", "oracle", "models", "probing", "features", "evaluation", "paths"});

    PipelineConfig cfg;
    {
        const json& d = j.at("dataset");
        check_keys(d, "dataset",
                   {"graphics", "sessions_per_graphic", "frames_per_session", "domains", "split", "seed", "grid_cells",
                    "cell_size_px", "density"});
        DatasetConfig& dc = cfg.dataset;
        dc.graphics = d.at("graphics").get<int>();
        dc.sessions_per_graphic = d.at("sessions_per_graphic").get<int>();
        dc.frames_per_session = d.at("frames_per_session").get<int>();
        dc.domains.clear();
        for (const auto& s : d.at("domains")) dc.domains.push_back(print_domain_from_string(s.get<std::string>()));
        const json& split = d.at("split");
        if (!split.is_array() || split.size() != 3) throw ConfigError("config: dataset.split must have 3 fractions");
        dc.split_train = split.at(0).get<double>();
        dc.split_val = split.at(1).get<double>();
        dc.split_test = split.at(2).get<double>();
        dc.seed = d.at("seed").get<std::uint64_t>();
        if (d.contains("grid_cells")) dc.grid_cells = d.at("grid_cells").get<int>();
        if (d.contains("cell_size_px")) dc.cell_size_px = d.at("cell_size_px").get<int>();
        if (d.contains("density")) dc.density = d.at("density").get<double>();
        dc.validate();
    }
    if (j.contains("oracle")) {
        check_keys(j.at("oracle"), "oracle", {"tau_percentile"});
        cfg.tau_percentile = require_in(j.at("oracle"), "oracle", "tau_percentile", 0.01, 0.99);
    }
    if (j.contains("models")) {
        const json& m = j.at("models");
        check_keys(m, "models",
                   {"random", "sharpness", "blur", "niqe-sg", "niqe-lbp-sg", "brisque-sgm", "lbp-sgm", "cnn3x32-sgm"});
        if (m.contains("random")) {
            check_keys(m.at("random"), "models.random", {"seed"});
            if (m.at("random").contains("seed")) cfg.random_seed = m.at("random").at("seed").get<std::uint64_t>();
        }
        if (m.contains("sharpness")) check_keys(m.at("sharpness"), "models.sharpness", {});
        if (m.contains("blur")) {
            check_keys(m.at("blur"), "models.blur", {"band_scale"});
            if (m.at("blur").contains("band_scale"))
                cfg.blur_band_scale = require_in(m.at("blur"), "models.blur", "band_scale", 0.0, 1.0);
        }
        for (const char* id : {"niqe-sg", "niqe-lbp-sg"}) {
            if (!m.contains(id)) continue;
            check_keys(m.at(id), std::string("models.") + id, {"cutoff"});
            if (m.at(id).contains("cutoff")) cfg.niqe_cutoff = require_in(m.at(id), id, "cutoff", 0.0, 1.0);
        }
        for (const char* id : {"brisque-sgm", "lbp-sgm"}) {
            if (!m.contains(id)) continue;
            check_keys(m.at(id), std::string("models.") + id, {"lambda_grid", "gamma_grid"});
            if (m.at(id).contains("lambda_grid")) cfg.krr_lambda_grid = m.at(id).at("lambda_grid").get<std::vector<double>>();
            if (m.at(id).contains("gamma_grid")) cfg.krr_gamma_grid = m.at(id).at("gamma_grid").get<std::vector<double>>();
        }
        if (m.contains("cnn3x32-sgm")) {
            const json& c = m.at("cnn3x32-sgm");
            check_keys(c, "models.cnn3x32-sgm", {"batch_size", "max_epochs", "patience", "lr"});
            if (c.contains("batch_size")) cfg.cnn.batch_size = c.at("batch_size").get<int>();
            if (c.contains("max_epochs")) cfg.cnn.max_epochs = c.at("max_epochs").get<int>();
            if (c.contains("patience")) cfg.cnn.patience = c.at("patience").get<int>();
            if (c.contains("lr")) cfg.cnn.lr = c.at("lr").get<double>();
        }
    }
    if (j.contains("probing")) {
        const json& p = j.at("probing");
        check_keys(p, "probing", {"batch_size", "max_epochs", "patience", "lr", "conv_channels"});
        if (p.contains("batch_size")) cfg.probe.batch_size = p.at("batch_size").get<int>();
        if (p.contains("max_epochs")) cfg.probe.max_epochs = p.at("max_epochs").get<int>();
        if (p.contains("patience")) cfg.probe.patience = p.at("patience").get<int>();
        if (p.contains("lr")) cfg.probe.lr = p.at("lr").get<double>();
        if (p.contains("conv_channels")) cfg.probe.conv_channels = p.at("conv_channels").get<int>();
    }
    if (j.contains("features")) {
        check_keys(j.at("features"), "features", {"sg_crop_only"});
        if (j.at("features").contains("sg_crop_only")) cfg.features_sg_crop_only = j.at("features").at("sg_crop_only").get<bool>();
    }
    if (j.contains("evaluation")) {
        check_keys(j.at("evaluation"), "evaluation", {"pauc_range"});
        const json& r = j.at("evaluation").at("pauc_range");
        if (!r.is_array() || r.size() != 2) throw ConfigError("config: evaluation.pauc_range must be [lo, hi]");
        cfg.pauc_lo = r.at(0).get<double>();
        cfg.pauc_hi = r.at(1).get<double>();
        if (!(cfg.pauc_lo >= 0 && cfg.pauc_hi <= 1 && cfg.pauc_hi > cfg.pauc_lo))
            throw ConfigError("config: evaluation.pauc_range must satisfy 0 <= lo < hi <= 1");
    }
    check_keys(j.at("paths"), "paths", {"run_dir"});
    cfg.run_dir = j.at("paths").at("run_dir").get<std::string>();
    return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config: " + path.string());
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_pipeline_config(text);
}

std::string pipeline_config_to_json(const PipelineConfig& cfg) {
    json domains = json::array();
    for (auto d : cfg.dataset.domains) domains.push_back(to_string(d));
    json j{
        {"dataset",
         {{"graphics", cfg.dataset.graphics},
          {"sessions_per_graphic", cfg.dataset.sessions_per_graphic},
          {"frames_per_session", cfg.dataset.frames_per_session},
          {"domains", domains},
          {"split", {cfg.dataset.split_train, cfg.dataset.split_val, cfg.dataset.split_test}},
          {"seed", cfg.dataset.seed},
          {"grid_cells", cfg.dataset.grid_cells},
          {"cell_size_px", cfg.dataset.cell_size_px},
          {"density", cfg.dataset.density}}},
        {"oracle", {{"tau_percentile", cfg.tau_percentile}}},
        {"models",
         {{"random", {{"seed", cfg.random_seed}}},
          {"sharpness", json::object()},
          {"blur", {{"band_scale", cfg.blur_band_scale}}},
          {"niqe-sg", {{"cutoff", cfg.niqe_cutoff}}},
          {"niqe-lbp-sg", {{"cutoff", cfg.niqe_cutoff}}},
          {"brisque-sgm", {{"lambda_grid", cfg.krr_lambda_grid}, {"gamma_grid", cfg.krr_gamma_grid}}},
          {"lbp-sgm", {{"lambda_grid", cfg.krr_lambda_grid}, {"gamma_grid", cfg.krr_gamma_grid}}},
          {"cnn3x32-sgm",
           {{"batch_size", cfg.cnn.batch_size},
            {"max_epochs", cfg.cnn.max_epochs},
            {"patience", cfg.cnn.patience},
            {"lr", cfg.cnn.lr}}}}},
        {"probing",
         {{"batch_size", cfg.probe.batch_size},
          {"max_epochs", cfg.probe.max_epochs},
          {"patience", cfg.probe.patience},
          {"lr", cfg.probe.lr},
          {"conv_channels", cfg.probe.conv_channels}}},
        {"features", {{"sg_crop_only", cfg.features_sg_crop_only}}},
        {"evaluation", {{"pauc_range", {cfg.pauc_lo, cfg.pauc_hi}}}},
        {"paths", {{"run_dir", cfg.run_dir.string()}}}};
    return j.dump(2);
}

// ------------------------------------------------------------ lockfile ----

namespace {

class RunLock {
  public:
    explicit RunLock(const fs::path& dir) : path_(dir / ".lock") {
        fs::create_directories(dir);
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0)
            throw DataError("run directory is locked by another command (remove " + path_.string() +
                            " if no command is running)");
    }
    ~RunLock() {
        if (fd_ >= 0) {
            ::close(fd_);
            std::error_code ec;
            fs::remove(path_, ec);
        }
    }
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

  private:
    fs::path path_;
    int fd_ = -1;
};

PipelineConfig load_run_config(const fs::path& run_dir) {
    return load_pipeline_config(run_dir / "config.json");
}

std::map<std::string, DigitalReference> load_all_refs(const fs::path& run_dir, const DatasetManifest& manifest) {
    std::map<std::string, DigitalReference> refs;
    for (const auto& e : manifest.entries)
        if (!refs.count(e.graphic_id)) refs.emplace(e.graphic_id, load_reference(run_dir / "dataset" / "refs", e.graphic_id));
    return refs;
}

}  // namespace

// ------------------------------------------------------------- helpers ----

std::vector<const ManifestEntry*> select_frames(const DatasetManifest& manifest, Split split,
                                                std::optional<PrintDomain> domain) {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : manifest.entries)
        if (e.split == split && (!domain || e.domain_id == *domain)) out.push_back(&e);
    return out;
}

void feature_table(const fs::path& run_dir, const DatasetManifest& manifest, FeatureKind kind,
                   std::vector<std::string>& frame_ids, std::vector<std::vector<double>>& rows) {
    fs::create_directories(run_dir / "features");
    fs::path cache = run_dir / "features" / (to_string(kind) + ".sgfq");
    if (load_feature_cache(cache, kind, frame_ids, rows) && frame_ids.size() == manifest.entries.size()) {
        bool aligned = true;
        for (std::size_t i = 0; i < frame_ids.size() && aligned; ++i) aligned = frame_ids[i] == manifest.entries[i].frame_id;
        if (aligned) return;
    }
    frame_ids.clear();
    rows.clear();
    for (const auto& e : manifest.entries) {
        Image img = load_frame_image(run_dir / "dataset", e);
        FeatureVector fv = kind == FeatureKind::brisque36 ? brisque_features(img, e.frame_id) : lbp_features(img);
        frame_ids.push_back(e.frame_id);
        rows.push_back(std::move(fv.values));
    }
    save_feature_cache(cache, kind, frame_ids, rows);
}

void cnn_tensor(const fs::path& run_dir, const std::vector<const ManifestEntry*>& entries, const LabelSet& labels,
                int input_size, std::vector<nn::real>& x, std::vector<double>& y) {
    std::size_t elems = static_cast<std::size_t>(input_size) * input_size;
    x.assign(entries.size() * elems, 0.0f);
    y.assign(entries.size(), 0.0);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        Image img = load_frame_image(run_dir / "dataset", *entries[i]);
        ImageF small = resample_area(to_float(img), input_size, input_size);
        nn::real* row = x.data() + i * elems;
        for (std::size_t p = 0; p < elems; ++p) row[p] = static_cast<nn::real>(small.pixels[p] / 255.0);
        y[i] = labels.by_frame(entries[i]->frame_id).s;
    }
}

std::vector<ScoredSample> score_frames(const fs::path& run_dir, const std::vector<const ManifestEntry*>& entries,
                                       const LabelSet& labels, const QualityScorer& scorer) {
    std::vector<ScoredSample> out;
    out.reserve(entries.size());
    for (const auto* e : entries) {
        Image img = load_frame_image(run_dir / "dataset", *e);
        const LabeledSample& l = labels.by_frame(e->frame_id);
        out.push_back({e->frame_id, scorer.score(img, e->frame_id), l.s, l.high_quality});
    }
    return out;
}

// ---------------------------------------------------------------- gen ----

void cmd_gen(const PipelineConfig& cfg) {
    RunLock lock(cfg.run_dir);
    {
        std::ofstream f(cfg.run_dir / "config.json");
        if (!f) throw DataError("cannot write run config to " + cfg.run_dir.string());
        f << pipeline_config_to_json(cfg) << "\n";
    }
    DatasetManifest manifest = build_dataset(cfg.dataset, cfg.run_dir / "dataset");
    std::cout << "gen: " << manifest.entries.size() << " frames, config_hash " << manifest.config_hash << "\n";
}

// -------------------------------------------------------------- label ----

void cmd_label(const fs::path& run_dir) {
    RunLock lock(run_dir);
    PipelineConfig cfg = load_run_config(run_dir);
    DatasetManifest manifest = load_manifest(run_dir / "dataset");
    auto refs = load_all_refs(run_dir, manifest);

    std::vector<double> scores(manifest.entries.size());
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const auto& e = manifest.entries[i];
        auto it = refs.find(e.graphic_id);
        if (it == refs.end()) throw DataError("missing digital reference for graphic " + e.graphic_id);
        scores[i] = oracle_score(load_frame_image(run_dir / "dataset", e), it->second);
    }

    // tau frozen from the training split of the primary domain, before any
    // scorer sees the data
    std::vector<double> train_scores;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const auto& e = manifest.entries[i];
        if (e.split == Split::train && e.domain_id == cfg.primary_domain()) train_scores.push_back(scores[i]);
    }
    double tau = choose_tau_percentile(train_scores, cfg.tau_percentile);

    LabelSet labels;
    labels.tau = tau;
    labels.config_hash = manifest.config_hash;
    labels.samples.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        labels.samples.push_back({manifest.entries[i].frame_id, scores[i], scores[i] >= tau});

    fs::create_directories(run_dir / "labels");
    save_labels(run_dir / "labels", labels);
    std::size_t high = 0;
    for (const auto& s : labels.samples) high += s.high_quality;
    std::cout << "label: tau=" << tau << " high=" << high << " low=" << labels.samples.size() - high << "\n";
}

// -------------------------------------------------------------- train ----

namespace {

struct TrainData {
    PipelineConfig cfg;
    DatasetManifest manifest;
    LabelSet labels;
};

TrainData load_train_inputs(const fs::path& run_dir) {
    TrainData d{load_run_config(run_dir), load_manifest(run_dir / "dataset"), load_labels(run_dir / "labels")};
    if (d.labels.config_hash != d.manifest.config_hash)
        throw DataError("labels were produced from a different dataset configuration; re-run `label`");
    fs::create_directories(run_dir / "models");
    return d;
}

// features + oracle targets for a frame subset, pulled from the cached table
void subset_features(const fs::path& run_dir, const TrainData& d, FeatureKind kind,
                     const std::vector<const ManifestEntry*>& entries, std::vector<std::vector<double>>& x,
                     std::vector<double>& y) {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;
    feature_table(run_dir, d.manifest, kind, ids, rows);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);
    x.clear();
    y.clear();
    for (const auto* e : entries) {
        x.push_back(rows[index.at(e->frame_id)]);
        y.push_back(d.labels.by_frame(e->frame_id).s);
    }
}

void assert_disjoint_graphics(const std::vector<const ManifestEntry*>& a, const std::vector<const ManifestEntry*>& b) {
    std::set<std::string> ga;
    for (const auto* e : a) ga.insert(e->graphic_id);
    for (const auto* e : b)
        if (ga.count(e->graphic_id)) throw DataError("train/val share graphic " + e->graphic_id + "; split hygiene violated");
}

}  // namespace

void cmd_train(const fs::path& run_dir, const std::string& model_id) {
    RunLock lock(run_dir);
    TrainData d = load_train_inputs(run_dir);
    const PipelineConfig& cfg = d.cfg;
    const std::string& hash = d.manifest.config_hash;
    fs::path out = run_dir / "models" / (model_id + ".json");

    auto train_entries = select_frames(d.manifest, Split::train, cfg.primary_domain());
    auto val_entries = select_frames(d.manifest, Split::val, cfg.primary_domain());

    if (model_id == "random") {
        save_random_artifact(out, model_id, cfg.random_seed, hash);
    } else if (model_id == "sharpness") {
        save_sharpness_artifact(out, model_id, hash);
    } else if (model_id == "blur") {
        save_blur_artifact(out, model_id, cfg.dataset.cell_size_px, cfg.blur_band_scale, hash);
    } else if (model_id == "niqe-sg" || model_id == "niqe-lbp-sg") {
        FeatureKind kind = model_id == "niqe-sg" ? FeatureKind::brisque36 : FeatureKind::lbp10;
        std::vector<std::vector<double>> x;
        std::vector<double> y;
        subset_features(run_dir, d, kind, train_entries, x, y);
        std::vector<std::vector<double>> pristine;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (y[i] > cfg.niqe_cutoff) pristine.push_back(x[i]);
        MVGModel model = fit_mvg(pristine, kind);
        save_mvg_artifact(out, model_id, model, cfg.niqe_cutoff, hash);
        std::cout << "train " << model_id << ": " << pristine.size() << " pristine frames (s > " << cfg.niqe_cutoff
                  << ")\n";
    } else if (model_id == "brisque-sgm" || model_id == "lbp-sgm") {
        FeatureKind kind = model_id == "brisque-sgm" ? FeatureKind::brisque36 : FeatureKind::lbp10;
        assert_disjoint_graphics(train_entries, val_entries);
        std::vector<std::vector<double>> xt, xv;
        std::vector<double> yt, yv;
        subset_features(run_dir, d, kind, train_entries, xt, yt);
        subset_features(run_dir, d, kind, val_entries, xv, yv);
        std::vector<KrrGridPoint> grid;
        KernelRidgeModel model = fit_kernel_ridge(xt, yt, xv, yv, kind, cfg.krr_lambda_grid, cfg.krr_gamma_grid, &grid);
        save_krr_artifact(out, model_id, model, hash);
        std::cout << "train " << model_id << ": lambda=" << model.ridge_lambda << " gamma=" << model.rbf_gamma << "\n";
    } else if (model_id == "cnn3x32-sgm") {
        assert_disjoint_graphics(train_entries, val_entries);
        std::vector<nn::real> xt, xv;
        std::vector<double> yt, yv;
        cnn_tensor(run_dir, train_entries, d.labels, 128, xt, yt);
        cnn_tensor(run_dir, val_entries, d.labels, 128, xv, yv);
        nn::Cnn3x32 model(128, 32, 64, sub_seed(cfg.dataset.seed, "cnn/init"));
        if (model.params().size() != 543233) throw NumericError("cnn3x32 parameter count drifted from the spec");
        double mean_y = 0;
        for (double v : yt) mean_y += v;
        model.set_output_bias(mean_y / static_cast<double>(yt.size()));
        nn::TrainConfig tc{cfg.cnn.batch_size, cfg.cnn.max_epochs, cfg.cnn.patience, cfg.cnn.lr,
                           sub_seed(cfg.dataset.seed, "cnn/train")};
        nn::TrainHistory history = nn::train_model(model, xt, yt, xv, yv, tc);
        nn::write_history_csv(run_dir / "models" / (model_id + ".history.csv"), history);
        nn::save_checkpoint(run_dir / "models" / (model_id + ".ckpt"), model, hash);
        save_cnn_artifact(out, model_id, model_id + ".ckpt", hash);
        std::cout << "train " << model_id << ": best epoch " << history.best_epoch << " val_mse " << history.best_val_mse
                  << " (" << history.rows.size() << " epochs)\n";
    } else {
        throw ConfigError("unknown model id: " + model_id);
    }
}

// --------------------------------------------------------------- eval ----

namespace {

std::vector<const ManifestEntry*> eval_frames(const PipelineConfig& cfg, const DatasetManifest& manifest,
                                              EvalSplit split) {
    if (split == EvalSplit::test) return select_frames(manifest, Split::test, cfg.primary_domain());
    std::vector<const ManifestEntry*> out;
    for (const auto& e : manifest.entries)
        if (e.split == Split::test && e.domain_id != cfg.primary_domain()) out.push_back(&e);
    if (out.empty()) throw DataError("dataset has no cross-domain frames (single-domain config)");
    return out;
}

}  // namespace

PaucReport cmd_eval(const fs::path& run_dir, const fs::path& artifact, EvalSplit split, bool force) {
    PipelineConfig cfg = load_run_config(run_dir);
    DatasetManifest manifest = load_manifest(run_dir / "dataset");
    LabelSet labels = load_labels(run_dir / "labels");

    std::string model_hash;
    auto scorer = load_scorer(artifact, &model_hash);
    if (!force && !model_hash.empty() && model_hash != manifest.config_hash)
        throw DataError("model " + scorer->model_id() + " was trained on a different dataset (config_hash mismatch); " +
                        "pass --force to evaluate anyway");

    auto entries = eval_frames(cfg, manifest, split);
    auto samples = score_frames(run_dir, entries, labels, *scorer);

    PaucReport report = make_pauc_report(scorer->model_id(), samples, cfg.pauc_lo, cfg.pauc_hi);
    EdcCurve model_curve = edc_curve(samples, scorer->model_id());
    EdcCurve ideal = ideal_curve(samples);

    RandomScorer random_ref("random-ref", cfg.random_seed);
    std::vector<ScoredSample> random_samples = samples;
    for (auto& s : random_samples) s.q = random_ref.score(Image{}, s.frame_id);
    EdcCurve random_curve = edc_curve(random_samples, "random");

    std::string split_name = split == EvalSplit::test ? "test" : "cross";
    fs::create_directories(run_dir / "reports");
    fs::path base = run_dir / "reports" / (scorer->model_id() + "-" + split_name);
    write_curve_csv(fs::path(base.string() + ".curve.csv"), model_curve);
    write_report_json(fs::path(base.string() + ".report.json"), report, manifest.config_hash);

    auto curve_xy = [](const EdcCurve& c) {
        std::pair<std::vector<double>, std::vector<double>> xy;
        for (const auto& p : c.points) {
            xy.first.push_back(p.discard);
            xy.second.push_back(p.fnmr);
        }
        return xy;
    };
    SvgChart chart("EDC (FNMR) — " + scorer->model_id() + " [" + split_name + "]", "fraction discarded", "FNMR");
    chart.set_x_range(0, 1);
    auto [mx, my] = curve_xy(model_curve);
    auto [ix, iy] = curve_xy(ideal);
    auto [rx, ry] = curve_xy(random_curve);
    chart.add_series(scorer->model_id(), "#1f77b4", mx, my);
    chart.add_series("ideal observer", "#2ca02c", ix, iy);
    chart.add_series("random", "#7f7f7f", rx, ry, true);
    chart.write(fs::path(base.string() + ".svg"));

    std::cout << "eval " << scorer->model_id() << " [" << split_name << "]: FNMR dpAUC " << report.fnmr_delta
              << ", ISRR dpAUC " << report.isrr_delta << " (n=" << report.n_samples << ")\n";
    return report;
}

// -------------------------------------------------------- probe sweep ----

namespace {

struct TapSet {
    std::vector<nn::real> maps;
    int h = 0, w = 0, c = 0;
    std::size_t n = 0;
};

TapSet compute_taps(const nn::Cnn3x32& backbone, const std::vector<nn::real>& x, std::size_t n, int block,
                    int batch) {
    TapSet taps;
    taps.n = n;
    taps.c = backbone.channels();
    std::size_t row = backbone.input_elems();
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch)) {
        std::size_t b = std::min(static_cast<std::size_t>(batch), n - start);
        std::vector<nn::real> out;
        backbone.forward_to_block(x.data() + start * row, static_cast<int>(b), block, out, taps.h, taps.w);
        taps.maps.insert(taps.maps.end(), out.begin(), out.end());
    }
    return taps;
}

std::vector<double> probe_predictions(const nn::Probe& probe, const TapSet& taps, int batch) {
    std::vector<double> preds;
    preds.reserve(taps.n);
    nn::Probe::Cache cache;
    std::size_t row = static_cast<std::size_t>(taps.h) * taps.w * taps.c;
    for (std::size_t start = 0; start < taps.n; start += static_cast<std::size_t>(batch)) {
        std::size_t b = std::min(static_cast<std::size_t>(batch), taps.n - start);
        probe.forward(taps.maps.data() + start * row, static_cast<int>(b), cache);
        for (std::size_t i = 0; i < b; ++i) preds.push_back(static_cast<double>(cache.pred[i]));
    }
    return preds;
}

}  // namespace

ProbeSweepReport cmd_probe_sweep(const fs::path& run_dir, const std::optional<fs::path>& cross_dir,
                                 const fs::path& backbone_ckpt) {
    PipelineConfig cfg = load_run_config(run_dir);
    DatasetManifest manifest = load_manifest(run_dir / "dataset");
    LabelSet labels = load_labels(run_dir / "labels");

    auto train_entries = select_frames(manifest, Split::train, cfg.primary_domain());
    auto val_entries = select_frames(manifest, Split::val, cfg.primary_domain());
    auto test_in = eval_frames(cfg, manifest, EvalSplit::test);

    // cross-domain test set: a second labeled run directory, or this run's
    // secondary domain
    fs::path cross_root = run_dir;
    DatasetManifest cross_manifest = manifest;
    LabelSet cross_labels = labels;
    std::vector<const ManifestEntry*> test_cross;
    if (cross_dir) {
        cross_root = *cross_dir;
        PipelineConfig ccfg = load_run_config(cross_root);
        cross_manifest = load_manifest(cross_root / "dataset");
        cross_labels = load_labels(cross_root / "labels");
        test_cross = select_frames(cross_manifest, Split::test, ccfg.primary_domain());
    } else {
        test_cross = eval_frames(cfg, manifest, EvalSplit::cross);
    }

    nn::Cnn3x32 backbone = nn::load_checkpoint(backbone_ckpt);
    ProbeSweepReport report;
    report.backbone_hash_before = nn::params_sha256(backbone.params());

    std::vector<nn::real> x_train, x_val, x_test_in, x_test_cross;
    std::vector<double> y_train, y_val, y_test_in_unused, y_test_cross_unused;
    cnn_tensor(run_dir, train_entries, labels, backbone.input_size(), x_train, y_train);
    cnn_tensor(run_dir, val_entries, labels, backbone.input_size(), x_val, y_val);
    cnn_tensor(run_dir, test_in, labels, backbone.input_size(), x_test_in, y_test_in_unused);
    cnn_tensor(cross_root, test_cross, cross_labels, backbone.input_size(), x_test_cross, y_test_cross_unused);

    auto to_samples = [](const std::vector<const ManifestEntry*>& entries, const LabelSet& ls,
                         const std::vector<double>& preds) {
        std::vector<ScoredSample> out;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const auto& l = ls.by_frame(entries[i]->frame_id);
            out.push_back({entries[i]->frame_id, preds[i], l.s, l.high_quality});
        }
        return out;
    };

    const int batch = cfg.probe.batch_size;
    double mean_y = 0;
    for (double v : y_train) mean_y += v;
    mean_y /= static_cast<double>(y_train.size());

    for (int block = 1; block <= 3; ++block) {
        TapSet tap_train = compute_taps(backbone, x_train, y_train.size(), block, batch);
        TapSet tap_val = compute_taps(backbone, x_val, y_val.size(), block, batch);

        for (nn::ProbeKind kind : {nn::ProbeKind::conv_lin, nn::ProbeKind::lin}) {
            nn::ProbeSpec spec{block, kind, cfg.probe.conv_channels};
            nn::Probe probe(spec, tap_train.c, tap_train.h, tap_train.w,
                            sub_seed(cfg.dataset.seed, "probe/" + to_string(kind) + "/" + std::to_string(block)));
            probe.set_output_bias(mean_y);
            nn::TrainConfig tc{cfg.probe.batch_size, cfg.probe.max_epochs, cfg.probe.patience, cfg.probe.lr,
                               sub_seed(cfg.dataset.seed, "probe-train/" + to_string(kind) + "/" + std::to_string(block))};
            nn::TrainHistory history = nn::train_model(probe, tap_train.maps, y_train, tap_val.maps, y_val, tc);
            nn::write_history_csv(run_dir / "models" /
                                      ("probe-" + to_string(kind) + "-b" + std::to_string(block) + ".history.csv"),
                                  history);

            TapSet tap_ti = compute_taps(backbone, x_test_in, test_in.size(), block, batch);
            auto samples_in = to_samples(test_in, labels, probe_predictions(probe, tap_ti, batch));
            tap_ti = TapSet{};
            TapSet tap_tc = compute_taps(backbone, x_test_cross, test_cross.size(), block, batch);
            auto samples_cross = to_samples(test_cross, cross_labels, probe_predictions(probe, tap_tc, batch));
            tap_tc = TapSet{};

            PaucReport in_r = make_pauc_report("probe", samples_in, cfg.pauc_lo, cfg.pauc_hi);
            PaucReport cross_r = make_pauc_report("probe", samples_cross, cfg.pauc_lo, cfg.pauc_hi);
            report.rows.push_back({to_string(kind), block, probe.params().size(), in_r.fnmr_delta, in_r.isrr_delta,
                                   cross_r.fnmr_delta, cross_r.isrr_delta});
        }
    }

    // fully trained backbone as the reference row
    {
        CnnScorer full("cnn3x32-sgm", backbone);
        auto samples_in = score_frames(run_dir, test_in, labels, full);
        auto samples_cross = score_frames(cross_root, test_cross, cross_labels, full);
        PaucReport in_r = make_pauc_report("full", samples_in, cfg.pauc_lo, cfg.pauc_hi);
        PaucReport cross_r = make_pauc_report("full", samples_cross, cfg.pauc_lo, cfg.pauc_hi);
        report.rows.push_back({"full", 0, backbone.params().size(), in_r.fnmr_delta, in_r.isrr_delta, cross_r.fnmr_delta,
                               cross_r.isrr_delta});
    }

    report.backbone_hash_after = nn::params_sha256(backbone.params());
    if (report.backbone_hash_after != report.backbone_hash_before)
        throw NumericError("probe training mutated the frozen backbone");

    fs::create_directories(run_dir / "reports");
    {
        std::ofstream f(run_dir / "reports" / "probe-sweep.csv");
        f << "probe_arch,probed_layer,param_count,fnmr_delta_in,isrr_delta_in,fnmr_delta_cross,isrr_delta_cross\n";
        char buf[256];
        for (const auto& r : report.rows) {
            std::snprintf(buf, sizeof(buf), "%s,%d,%zu,%.9g,%.9g,%.9g,%.9g\n", r.arch.c_str(), r.block, r.param_count,
                          r.fnmr_delta_in, r.isrr_delta_in, r.fnmr_delta_cross, r.isrr_delta_cross);
            f << buf;
        }
    }
    {
        json rows = json::array();
        for (const auto& r : report.rows)
            rows.push_back({{"arch", r.arch},
                            {"block", r.block},
                            {"param_count", r.param_count},
                            {"fnmr_delta_in", r.fnmr_delta_in},
                            {"isrr_delta_in", r.isrr_delta_in},
                            {"fnmr_delta_cross", r.fnmr_delta_cross},
                            {"isrr_delta_cross", r.isrr_delta_cross}});
        json j{{"rows", rows},
               {"backbone_hash_before", report.backbone_hash_before},
               {"backbone_hash_after", report.backbone_hash_after}};
        std::ofstream f(run_dir / "reports" / "probe-sweep.json");
        f << j.dump(2) << "\n";
    }
    std::cout << "probe-sweep: " << report.rows.size() << " rows written\n";
    return report;
}

// ---------------------------------------------------------- stream sim ----

void cmd_stream_sim(const fs::path& run_dir, const fs::path& artifact, double sigma, GatePolicy policy, int window) {
    PipelineConfig cfg = load_run_config(run_dir);
    DatasetManifest manifest = load_manifest(run_dir / "dataset");
    LabelSet labels = load_labels(run_dir / "labels");
    auto sessions = load_sessions(run_dir / "dataset");
    auto graphic_splits = split_by_graphic(manifest);

    std::string model_hash;
    auto scorer = load_scorer(artifact, &model_hash);

    std::map<std::string, const ManifestEntry*> by_id;
    for (const auto& e : manifest.entries) by_id.emplace(e.frame_id, &e);

    fs::create_directories(run_dir / "timelines");
    std::ofstream summary(run_dir / "timelines" / "summary.csv");
    summary << "session_id,trajectory_kind,n_frames,selected_index,selected_frame_id\n";

    GateConfig gate{sigma, policy, window};
    for (const auto& session : sessions) {
        if (graphic_splits.at(session.graphic_id) != Split::test || session.domain_id != cfg.primary_domain()) continue;
        std::vector<double> q, s;
        for (const auto& fid : session.frame_ids) {
            const ManifestEntry* e = by_id.at(fid);
            q.push_back(scorer->score(load_frame_image(run_dir / "dataset", *e), fid));
            s.push_back(labels.by_frame(fid).s);
        }
        SessionTimeline tl = gate_session(session.session_id, session.frame_ids, q, s, gate);

        std::ofstream f(run_dir / "timelines" / (session.session_id + ".csv"));
        f << "session_id,frame_idx,q,s,accepted\n";
        char buf[256];
        for (std::size_t i = 0; i < tl.rows.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%s,%zu,%.9g,%.9g,%d\n", session.session_id.c_str(), i, tl.rows[i].q,
                          tl.rows[i].s, tl.rows[i].accepted ? 1 : 0);
            f << buf;
        }

        std::vector<double> idx(q.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<double>(i);
        SvgChart chart("session " + session.session_id + " (" + to_string(session.kind) + ")", "frame index", "score");
        chart.add_series("predicted q", "#1f77b4", idx, q);
        chart.add_series("oracle s", "#2ca02c", idx, s, true);
        chart.write(run_dir / "timelines" / (session.session_id + ".svg"));

        summary << session.session_id << "," << to_string(session.kind) << "," << q.size() << ","
                << (tl.selected ? static_cast<long>(*tl.selected) : -1) << ","
                << (tl.selected ? session.frame_ids[*tl.selected] : "") << "\n";
    }
    std::cout << "stream-sim: timelines written to " << (run_dir / "timelines").string() << "\n";
}

// ------------------------------------------------------------- report ----

void cmd_report(const fs::path& run_dir) {
    fs::path dir = run_dir / "reports";
    if (!fs::exists(dir)) throw DataError("no reports directory under " + run_dir.string());
    struct Cell {
        double fnmr = std::nan(""), isrr = std::nan("");
    };
    std::map<std::string, std::map<std::string, Cell>> table;  // model -> split -> deltas
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        auto pos = name.rfind(".report.json");
        if (pos == std::string::npos) continue;
        std::string stem = name.substr(0, pos);  // <model>-<split>
        auto dash = stem.rfind('-');
        if (dash == std::string::npos) continue;
        std::string split = stem.substr(dash + 1);
        if (split != "test" && split != "cross") continue;
        PaucReport r = read_report_json(entry.path());
        table[r.model_id][split] = {r.fnmr_delta, r.isrr_delta};
    }
    if (table.empty()) throw DataError("no per-model reports found in " + dir.string() + "; run `eval` first");

    std::ofstream f(dir / "summary.csv");
    f << "model_id,fnmr_delta_pauc_test,isrr_delta_pauc_test,fnmr_delta_pauc_cross,isrr_delta_pauc_cross\n";
    char buf[256];
    for (const auto& [model, cells] : table) {
        auto cell = [&](const std::string& split) {
            auto it = cells.find(split);
            return it == cells.end() ? Cell{} : it->second;
        };
        Cell t = cell("test"), c = cell("cross");
        auto num = [](double v) {
            if (std::isnan(v)) return std::string();
            char b[64];
            std::snprintf(b, sizeof(b), "%.9g", v);
            return std::string(b);
        };
        std::snprintf(buf, sizeof(buf), "%s,%s,%s,%s,%s\n", model.c_str(), num(t.fnmr).c_str(), num(t.isrr).c_str(),
                      num(c.fnmr).c_str(), num(c.isrr).c_str());
        f << buf;
    }
    std::cout << "report: " << (dir / "summary.csv").string() << " (" << table.size() << " models)\n";
}

}  // namespace sgq
