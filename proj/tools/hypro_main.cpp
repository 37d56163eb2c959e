// Command-line front end: fit-base, fit-energy, predict, evaluate, synth, pipeline.

#include "hypro/hypro.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

void print_summary(const std::string& what, const fs::path& where) {
    std::cout << what << " -> " << where.string() << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Long-horizon event sequence forecasting with an energy-reranked point process"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string base_path;
    std::string energy_path;
    std::string pred_path;
    std::string truth_path;
    std::string spec_path;
    std::optional<std::string> objective;
    bool regularize = false;
    std::optional<std::size_t> n_noise;
    std::optional<std::size_t> m_proposals;

    auto* fit_base = app.add_subcommand("fit-base", "Maximum-likelihood fit of the base point process");
    fit_base->add_option("--config", config_path, "Experiment config (JSON)")->required();
    fit_base->add_option("--out", out_dir, "Output directory")->required();

    auto* fit_energy = app.add_subcommand("fit-energy", "Noise-contrastive training of the energy function");
    fit_energy->add_option("--config", config_path, "Experiment config (JSON)")->required();
    fit_energy->add_option("--base", base_path, "Trained base model file")->required();
    fit_energy->add_option("--out", out_dir, "Output directory")->required();
    fit_energy->add_option("--objective", objective, "binary | multi")->check(CLI::IsMember({"binary", "multi"}));
    fit_energy->add_flag("--regularize", regularize, "Add the distance-margin regularizer");
    fit_energy->add_option("--n-noise", n_noise, "Noise sequences per observed sequence");

    auto* predict_cmd = app.add_subcommand("predict", "Importance-sampled predictions for the test split");
    predict_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();
    predict_cmd->add_option("--base", base_path, "Trained base model file")->required();
    predict_cmd->add_option("--energy", energy_path, "Trained energy model file")->required();
    predict_cmd->add_option("--out", out_dir, "Output directory")->required();
    predict_cmd->add_option("--m-proposals", m_proposals, "Proposals per prefix");

    auto* evaluate_cmd = app.add_subcommand("evaluate", "Metrics and diagnostics for a prediction dump");
    evaluate_cmd->add_option("--pred", pred_path, "predictions.jsonl")->required();
    evaluate_cmd->add_option("--truth", truth_path, "Dataset holding the true sequences")->required();
    evaluate_cmd->add_option("--out", out_dir, "Output directory")->required();
    evaluate_cmd->add_option("--config", config_path, "Optional config supplying the OTD grid and K");

    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth_cmd->add_option("--spec", spec_path, "Synthetic spec (JSON)")->required();
    synth_cmd->add_option("--out", out_dir, "Output dataset file (JSON lines)")->required();

    auto* pipeline_cmd = app.add_subcommand("pipeline", "fit-base, fit-energy, predict and evaluate in order");
    pipeline_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();
    pipeline_cmd->add_option("--out", out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        const fs::path out(out_dir);
        if (fit_base->parsed()) {
            const auto cfg = hypro::load_experiment_config(config_path);
            const auto data = hypro::load_experiment_data(cfg);
            const auto model = hypro::run_fit_base(cfg, data, out);
            print_summary("base model", out / "base.model");
        } else if (fit_energy->parsed()) {
            auto cfg = hypro::load_experiment_config(config_path);
            if (objective) cfg.train.objective = hypro::parse_objective(*objective);
            if (regularize) cfg.train.regularize = true;
            if (n_noise) cfg.train.num_noise = *n_noise;
            cfg.train.validate();
            const auto data = hypro::load_experiment_data(cfg);
            const auto base = hypro::load_model(base_path);
            const auto fn = hypro::run_fit_energy(cfg, *base, data, out);
            print_summary("energy model", out / "energy.model");
        } else if (predict_cmd->parsed()) {
            auto cfg = hypro::load_experiment_config(config_path);
            if (m_proposals) cfg.infer.num_proposals = *m_proposals;
            cfg.infer.validate();
            const auto data = hypro::load_experiment_data(cfg);
            const auto base = hypro::load_model(base_path);
            const auto fn = hypro::load_energy(energy_path);
            const auto preds = hypro::run_predict(cfg, *base, fn, data.test);
            hypro::save_predictions(out / "predictions.jsonl", preds);
            print_summary("predictions", out / "predictions.jsonl");
        } else if (evaluate_cmd->parsed()) {
            hypro::OtdConfig otd_cfg;
            std::size_t bins = 30;
            std::optional<std::size_t> k;
            if (!config_path.empty()) {
                const auto cfg = hypro::load_experiment_config(config_path, /*require_paths=*/false);
                otd_cfg = cfg.otd;
                bins = cfg.histogram_bins;
                k = cfg.num_types;
            }
            const auto truth = hypro::load_dataset(truth_path, k);
            const auto preds = hypro::load_predictions(pred_path);
            const auto report = hypro::evaluate_predictions(preds, truth, otd_cfg, bins, out);
            std::cout << "rmse " << report["rmse"].get<double>() << "  otd_mean " << report["otd_mean"].get<double>()
                      << '\n';
            print_summary("report", out / "report.json");
        } else if (synth_cmd->parsed()) {
            const auto spec = hypro::parse_synth_spec(hypro::read_json_file(spec_path));
            const auto data = hypro::generate(spec);
            hypro::save_dataset(out, data);
            print_summary(std::to_string(data.size()) + " sequences", out);
        } else if (pipeline_cmd->parsed()) {
            const auto cfg = hypro::load_experiment_config(config_path);
            const auto result = hypro::run_pipeline(cfg, out);
            std::cout << "hypro rmse " << result.hypro_rmse << " otd " << result.hypro_otd << " | base rmse "
                      << result.base_rmse << " otd " << result.base_otd << '\n';
            print_summary("metrics", out / "metrics.json");
        }
    } catch (const hypro::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}
