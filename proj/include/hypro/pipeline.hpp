#pragma once

#include "hypro/config.hpp"
#include "hypro/core.hpp"
#include "hypro/energy.hpp"
#include "hypro/inference.hpp"
#include "hypro/io.hpp"
#include "hypro/metrics.hpp"
#include "hypro/nce.hpp"
#include "hypro/rng.hpp"
#include "hypro/synth.hpp"
#include "hypro/tpp.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace hypro {

// Named substreams of the experiment seed.
[[nodiscard]] inline RngStream stage_stream(const ExperimentConfig& cfg, std::string_view stage) {
    return RngStream(cfg.seed).substream(stage);
}

struct ExperimentData {
    Dataset train;
    Dataset dev;
    Dataset test;
};

/// Loads the configured files, or generates the synthetic splits (and writes them
/// under out_dir/data when out_dir is non-empty).
[[nodiscard]] inline ExperimentData load_experiment_data(const ExperimentConfig& cfg,
                                                         const std::filesystem::path& out_dir = {}) {
    ExperimentData d;
    if (cfg.synth) {
        const RngStream synth = stage_stream(cfg, "synth");
        auto make = [&](std::size_t n, std::string_view part) {
            SynthSpec spec = cfg.synth->spec;
            spec.num_seqs = n;
            Dataset ds = generate(spec, synth.substream(part));
            for (auto& id : ds.ids) id = std::string(part) + "-" + id;
            return ds;
        };
        d.train = make(cfg.synth->train, "train");
        d.dev = make(cfg.synth->dev, "dev");
        d.test = make(cfg.synth->test, "test");
        if (!out_dir.empty()) {
            save_dataset(out_dir / "data" / "train.jsonl", d.train);
            save_dataset(out_dir / "data" / "dev.jsonl", d.dev);
            save_dataset(out_dir / "data" / "test.jsonl", d.test);
        }
        return d;
    }
    d.train = load_dataset(cfg.data.train, cfg.num_types);
    if (!cfg.data.dev.empty()) d.dev = load_dataset(cfg.data.dev, cfg.num_types);
    d.test = load_dataset(cfg.data.test, cfg.num_types);
    return d;
}

[[nodiscard]] inline std::unique_ptr<IntensityModel> run_fit_base(const ExperimentConfig& cfg, const ExperimentData& data,
                                                                  const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::ofstream log(out_dir / "base_train_log.jsonl", std::ios::trunc);
    MleResult fit = fit_mle(cfg.base_family, data.train, data.dev.empty() ? nullptr : &data.dev, cfg.base_optimizer,
                            stage_stream(cfg, "base-fit"), [&](const MleEpochRecord& r) {
                                log << json{{"epoch", r.epoch},
                                            {"train_loglik", r.train_loglik},
                                            {"dev_loglik", r.dev_loglik},
                                            {"learning_rate", r.learning_rate}}
                                           .dump()
                                    << '\n';
                            });
    save_model(out_dir / "base.model", *fit.model);
    return std::move(fit.model);
}

[[nodiscard]] inline EnergyFunction run_fit_energy(const ExperimentConfig& cfg, const IntensityModel& base,
                                                   const ExperimentData& data, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const SplitSet train = make_splits(data.train, cfg.horizon);
    const SplitSet dev = make_splits(data.dev, cfg.horizon);
    RngStream init = stage_stream(cfg, "energy-init");
    EnergyFunction fn(cfg.features, cfg.hidden, init);
    std::ofstream log(out_dir / "energy_train_log.jsonl", std::ios::trunc);
    NceResult res = train_energy(base, std::move(fn), train.splits, dev.splits, cfg.train, stage_stream(cfg, "noise"),
                                 [&](const NceEpochRecord& r) {
                                     log << json{{"epoch", r.epoch},
                                                 {"train_loss", r.train_loss},
                                                 {"dev_loss", r.dev_loss},
                                                 {"omega", r.omega},
                                                 {"wall_ms", r.wall_ms}}
                                                .dump()
                                         << '\n';
                                 });
    save_energy(out_dir / "energy.model", res.energy);
    return std::move(res.energy);
}

/// Importance-sampled predictions for every test prefix; prefix i draws from
/// substream i of the "proposals" stream.
[[nodiscard]] inline std::vector<PredictionRecord> run_predict(const ExperimentConfig& cfg, const IntensityModel& base,
                                                               const EnergyFunction& fn, const Dataset& test) {
    const SplitSet splits = make_splits(test, cfg.horizon);
    const RngStream proposals = stage_stream(cfg, "proposals");
    std::vector<PredictionRecord> out(splits.splits.size());
    parallel_for(splits.splits.size(), [&](std::size_t i) {
        const HorizonSplit& s = splits.splits[i];
        Prediction p = predict(base, fn, s.prefix, s.T_prime, cfg.infer, proposals.substream(i));
        PredictionRecord& r = out[i];
        r.prefix_id = splits.ids[i];
        r.T = s.T;
        r.T_prime = s.T_prime;
        r.chosen = std::move(p.chosen);
        r.chosen_index = p.chosen_index;
        r.proposals = std::move(p.proposals);
        r.observed_energy = energy(fn, concatenate(s.prefix, s.truth), s);
    });
    return out;
}

/// The base model alone: the first drawn proposal of each record.
[[nodiscard]] inline std::vector<PredictionRecord> first_proposal_predictions(std::vector<PredictionRecord> preds) {
    for (auto& p : preds) {
        if (p.proposals.empty()) continue;
        p.chosen = p.proposals.front().continuation;
        p.chosen_index = 0;
    }
    return preds;
}

[[nodiscard]] inline json eval_report_to_json(const EvalReport& r) {
    json by = json::array();
    for (const auto& [c, d] : r.otd_by_cdel) by.push_back({{"c_del", c}, {"otd", d}});
    return {{"num_sequences", r.num_sequences},
            {"rmse", r.rmse},
            {"otd_by_cdel", by},
            {"otd_mean", r.otd_mean},
            {"per_type_counts", {{"truth", r.truth_counts}, {"pred", r.pred_counts}}}};
}

[[nodiscard]] inline json cascade_to_json(const CascadeReport& c) {
    json groups = json::array();
    for (const auto& g : c.groups) {
        groups.push_back({{"first_error_token", g.first_error_token},
                          {"sequences", g.sequences},
                          {"subsequent_tokens", g.subsequent_tokens},
                          {"subsequent_error_rate", g.error_rate()}});
    }
    const LinearFit& f = c.time_regression;
    return {{"groups", groups},
            {"error_free_sequences", c.error_free_sequences},
            {"time_regression",
             {{"points", f.points},
              {"slope", f.slope},
              {"intercept", f.intercept},
              {"slope_stderr", f.slope_stderr},
              {"slope_p_value", f.slope_p_value},
              {"degenerate", f.degenerate}}}};
}

/// Pairs each prediction with the true continuation of the same sequence.
[[nodiscard]] inline std::vector<std::pair<EventSequence, EventSequence>> truth_prediction_pairs(
    const std::vector<PredictionRecord>& preds, const Dataset& truth) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < truth.size(); ++i) index.emplace(truth.id(i), i);
    std::vector<std::pair<EventSequence, EventSequence>> pairs;
    pairs.reserve(preds.size());
    for (const auto& p : preds) {
        const auto it = index.find(p.prefix_id);
        if (it == index.end()) throw SchemaError("prediction for unknown sequence '" + p.prefix_id + "'");
        pairs.emplace_back(slice(truth.sequences[it->second], p.T, p.T_prime), p.chosen);
    }
    return pairs;
}

/// Metrics, cascading diagnostics and energy histograms. Writes report.json and
/// energy_histograms.csv when out_dir is non-empty.
inline json evaluate_predictions(const std::vector<PredictionRecord>& preds, const Dataset& truth,
                                 const OtdConfig& otd_cfg, std::size_t bins, const std::filesystem::path& out_dir = {}) {
    const auto pairs = truth_prediction_pairs(preds, truth);
    json report = eval_report_to_json(evaluate_pairs(pairs, truth.num_types, otd_cfg));
    try {
        report["cascading"] = cascade_to_json(cascading_analysis(pairs));
    } catch (const InsufficientDataError& e) {
        report["cascading"] = {{"insufficient_data", e.what()}};
    }

    std::vector<double> observed;
    std::vector<double> chosen;
    std::vector<double> noise;
    for (const auto& p : preds) {
        if (p.observed_energy) observed.push_back(*p.observed_energy);
        for (std::size_t m = 0; m < p.proposals.size(); ++m) {
            (m == p.chosen_index ? chosen : noise).push_back(p.proposals[m].energy);
        }
    }
    std::vector<HistogramRow> rows;
    for (const auto& [label, values] :
         {std::pair{"observed", &observed}, std::pair{"chosen", &chosen}, std::pair{"noise", &noise}}) {
        if (values->empty()) continue;
        auto h = energy_histogram_export(label, *values, std::max<std::size_t>(1, bins));
        rows.insert(rows.end(), h.begin(), h.end());
    }
    if (!out_dir.empty()) {
        write_json_file(out_dir / "report.json", report);
        auto csv = detail::open_output(out_dir / "energy_histograms.csv");
        csv << histogram_csv(rows);
    }
    return report;
}

struct PipelineResult {
    json metrics;  // {"hypro": report, "base": report}
    double hypro_rmse{0.0};
    double base_rmse{0.0};
    double hypro_otd{0.0};
    double base_otd{0.0};
    std::vector<double> hypro_rmse_per_sequence;
    std::vector<double> base_rmse_per_sequence;
};

/// Fit base, train energy, predict the test split, evaluate HYPRO and the base-alone
/// baseline. Writes every artifact under out_dir, including metrics.json.
[[nodiscard]] inline PipelineResult run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_json_file(out_dir / "config.resolved.json", experiment_config_to_json(cfg));
    const ExperimentData data = load_experiment_data(cfg, out_dir);
    const auto base = run_fit_base(cfg, data, out_dir);
    const EnergyFunction fn = run_fit_energy(cfg, *base, data, out_dir);
    const auto preds = run_predict(cfg, *base, fn, data.test);
    save_predictions(out_dir / "predictions.jsonl", preds);
    const auto base_preds = first_proposal_predictions(preds);
    save_predictions(out_dir / "predictions_base.jsonl", base_preds);

    PipelineResult r;
    const json hypro = evaluate_predictions(preds, data.test, cfg.otd, cfg.histogram_bins, out_dir / "eval");
    const json base_only = evaluate_predictions(base_preds, data.test, cfg.otd, cfg.histogram_bins, out_dir / "eval_base");
    r.metrics = {{"hypro", hypro}, {"base", base_only}};
    write_json_file(out_dir / "metrics.json", r.metrics);
    r.hypro_rmse = hypro["rmse"].get<double>();
    r.base_rmse = base_only["rmse"].get<double>();
    r.hypro_otd = hypro["otd_mean"].get<double>();
    r.base_otd = base_only["otd_mean"].get<double>();
    for (const auto& [t, p] : truth_prediction_pairs(preds, data.test)) {
        r.hypro_rmse_per_sequence.push_back(count_rmse(t, p, data.test.num_types));
    }
    for (const auto& [t, p] : truth_prediction_pairs(base_preds, data.test)) {
        r.base_rmse_per_sequence.push_back(count_rmse(t, p, data.test.num_types));
    }
    return r;
}

} // namespace hypro
