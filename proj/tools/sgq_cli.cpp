#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "sgq/pipeline.hpp"

// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric error.
namespace {

int run(int argc, char** argv) {
    CLI::App app{"Secure-graphic capture quality benchmark pipeline"};
    app.require_subcommand(1);

    std::string config_path, dataset_dir, model_id, artifact, split = "test", cross_dir, backbone, runs_dir;
    std::string policy = "first_above";
    double sigma = 0.0;
    int window = 3;
    bool force = false;
    std::optional<std::uint64_t> seed_override;

    auto* gen = app.add_subcommand("gen", "Generate the dataset described by a config file");
    gen->add_option("--config", config_path, "pipeline config JSON")->required();
    gen->add_option("--seed", seed_override, "override the config's dataset seed");

    auto* label = app.add_subcommand("label", "Score every frame with the oracle and freeze tau");
    label->add_option("--dataset", dataset_dir, "run directory produced by gen")->required();

    auto* train = app.add_subcommand("train", "Fit one scorer and write its artifact");
    train->add_option("--dataset", dataset_dir)->required();
    train->add_option("--model", model_id, "one of: random sharpness blur niqe-sg niqe-lbp-sg brisque-sgm lbp-sgm cnn3x32-sgm")
        ->required();

    auto* eval = app.add_subcommand("eval", "Evaluate a model artifact on a test split");
    eval->add_option("--dataset", dataset_dir)->required();
    eval->add_option("--model", artifact, "model artifact JSON path")->required();
    eval->add_option("--split", split)->check(CLI::IsMember({"test", "cross"}));
    eval->add_flag("--force", force, "ignore config-hash mismatches");

    auto* sweep = app.add_subcommand("probe-sweep", "Train probes on a frozen backbone and compare domains");
    sweep->add_option("--dataset", dataset_dir)->required();
    sweep->add_option("--cross", cross_dir, "separate labeled run directory for the cross domain");
    sweep->add_option("--backbone", backbone, "SGNN checkpoint of the trained CNN")->required();

    auto* stream = app.add_subcommand("stream-sim", "Replay test sessions through the gatekeeper");
    stream->add_option("--dataset", dataset_dir)->required();
    stream->add_option("--model", artifact)->required();
    stream->add_option("--sigma", sigma)->required();
    stream->add_option("--policy", policy)->check(CLI::IsMember({"first_above", "best_of_session", "best_in_window"}));
    stream->add_option("--window", window);

    auto* report = app.add_subcommand("report", "Merge per-model reports into a summary table");
    report->add_option("--dir", runs_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        sgq::PipelineConfig cfg = sgq::load_pipeline_config(config_path);
        if (seed_override) cfg.dataset.seed = *seed_override;
        sgq::cmd_gen(cfg);
    } else if (label->parsed()) {
        sgq::cmd_label(dataset_dir);
    } else if (train->parsed()) {
        sgq::cmd_train(dataset_dir, model_id);
    } else if (eval->parsed()) {
        sgq::cmd_eval(dataset_dir, artifact, split == "test" ? sgq::EvalSplit::test : sgq::EvalSplit::cross, force);
    } else if (sweep->parsed()) {
        std::optional<std::filesystem::path> cross;
        if (!cross_dir.empty()) cross = cross_dir;
        sgq::cmd_probe_sweep(dataset_dir, cross, backbone);
    } else if (stream->parsed()) {
        sgq::cmd_stream_sim(dataset_dir, artifact, sigma, sgq::gate_policy_from_string(policy), window);
    } else if (report->parsed()) {
        sgq::cmd_report(runs_dir);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const sgq::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const sgq::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const sgq::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
