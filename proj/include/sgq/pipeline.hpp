#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sgq/dataset.hpp"
#include "sgq/eval.hpp"
#include "sgq/models.hpp"
#include "sgq/nn/train.hpp"
#include "sgq/oracle.hpp"
#include "sgq/stream.hpp"

namespace sgq {

// Resolved run configuration; one JSON document drives the whole pipeline.
struct PipelineConfig {
    DatasetConfig dataset;
    double tau_percentile = 0.40;

    std::uint64_t random_seed = 1;  // random scorer stream
    double blur_band_scale = 0.25;
    double niqe_cutoff = 0.95;
    bool features_sg_crop_only = false;
    std::vector<double> krr_lambda_grid = {1e-3, 1e-2, 1e-1, 1.0};
    std::vector<double> krr_gamma_grid = {0.01, 0.1, 1.0, 10.0};

    struct CnnParams {
        int batch_size = 32;
        int max_epochs = 200;
        int patience = 10;
        double lr = 1e-4;
    } cnn;
    struct ProbeParams {
        int batch_size = 32;
        int max_epochs = 200;
        int patience = 10;
        double lr = 1e-4;
        int conv_channels = 16;
    } probe;

    double pauc_lo = 0.0;
    double pauc_hi = 0.70;

    std::filesystem::path run_dir = "runs/default";

    PrintDomain primary_domain() const { return dataset.domains.at(0); }
};

// Parses and schema-validates the config document; unknown keys are rejected.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig parse_pipeline_config(const std::string& text);
std::string pipeline_config_to_json(const PipelineConfig& cfg);

inline const char* kModelIds[] = {"random",      "sharpness",   "blur",    "niqe-sg",
                                  "niqe-lbp-sg", "brisque-sgm", "lbp-sgm", "cnn3x32-sgm"};

// Commands. Each is idempotent for identical inputs; they operate on the run
// directory layout  <run>/{dataset,labels,features,models,reports,timelines}.
void cmd_gen(const PipelineConfig& cfg);
void cmd_label(const std::filesystem::path& run_dir);
void cmd_train(const std::filesystem::path& run_dir, const std::string& model_id);

enum class EvalSplit { test, cross };

PaucReport cmd_eval(const std::filesystem::path& run_dir, const std::filesystem::path& artifact, EvalSplit split,
                    bool force = false);

struct ProbeSweepRow {
    std::string arch;  // "lin", "conv_lin", or "full"
    int block = 0;     // 0 for the full model
    std::size_t param_count = 0;
    double fnmr_delta_in = 0, isrr_delta_in = 0;
    double fnmr_delta_cross = 0, isrr_delta_cross = 0;
};

struct ProbeSweepReport {
    std::vector<ProbeSweepRow> rows;
    std::string backbone_hash_before, backbone_hash_after;
};

ProbeSweepReport cmd_probe_sweep(const std::filesystem::path& run_dir,
                                 const std::optional<std::filesystem::path>& cross_dir,
                                 const std::filesystem::path& backbone_ckpt);

void cmd_stream_sim(const std::filesystem::path& run_dir, const std::filesystem::path& artifact, double sigma,
                    GatePolicy policy, int window = 3);

void cmd_report(const std::filesystem::path& run_dir);

// --- shared helpers (also used by the test suites) ------------------------

std::vector<const ManifestEntry*> select_frames(const DatasetManifest& manifest, Split split,
                                                std::optional<PrintDomain> domain);

// Per-frame features for the whole manifest, cached on disk under
// <run>/features/<kind>.sgfq.
void feature_table(const std::filesystem::path& run_dir, const DatasetManifest& manifest, FeatureKind kind,
                   std::vector<std::string>& frame_ids, std::vector<std::vector<double>>& rows);

// Frames resampled to the CNN input and scaled to [0,1], plus oracle targets.
void cnn_tensor(const std::filesystem::path& run_dir, const std::vector<const ManifestEntry*>& entries,
                const LabelSet& labels, int input_size, std::vector<nn::real>& x, std::vector<double>& y);

std::vector<ScoredSample> score_frames(const std::filesystem::path& run_dir,
                                       const std::vector<const ManifestEntry*>& entries, const LabelSet& labels,
                                       const QualityScorer& scorer);

}  // namespace sgq
