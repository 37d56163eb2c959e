#pragma once

#include "hypro/core.hpp"
#include "hypro/energy.hpp"
#include "hypro/error.hpp"
#include "hypro/inference.hpp"
#include "hypro/intensity.hpp"
#include "hypro/io.hpp"
#include "hypro/metrics.hpp"
#include "hypro/nce.hpp"
#include "hypro/optim.hpp"
#include "hypro/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hypro {

/// How each sequence is cut into an observed prefix and a continuation.
struct HorizonPolicy {
    enum class Kind { kLength, kAbsolute, kTokenBudget };
    Kind kind{Kind::kLength};
    double length{1.0};       // kLength: T' = t_end, T = t_end - length
    double T{0.0};            // kAbsolute
    double T_prime{1.0};      // kAbsolute
    std::size_t tokens{20};   // kTokenBudget: exactly this many continuation events
};

struct DataPaths {
    std::filesystem::path train;
    std::filesystem::path dev;
    std::filesystem::path test;
};

/// Synthetic data generated in place of dataset files.
struct SynthSplits {
    SynthSpec spec;
    std::size_t train{1000};
    std::size_t dev{200};
    std::size_t test{200};
};

struct ExperimentConfig {
    DataPaths data;
    std::optional<SynthSplits> synth;
    std::size_t num_types{1};
    std::string time_unit{"1"};
    HorizonPolicy horizon;
    ModelFamily base_family{ModelFamily::kHawkesExp};
    OptimizerConfig base_optimizer{};
    FeatureConfig features{};
    std::vector<std::size_t> hidden{64, 32};
    TrainConfig train{};
    InferConfig infer{};
    OtdConfig otd{};
    std::size_t histogram_bins{30};
    std::uint64_t seed{0};
    std::filesystem::path output_dir{"out"};
};

namespace detail {

inline OptimizerConfig parse_optimizer(const json& j, OptimizerConfig o) {
    o.learning_rate = j.value("learning_rate", o.learning_rate);
    o.beta1 = j.value("beta1", o.beta1);
    o.beta2 = j.value("beta2", o.beta2);
    o.epsilon = j.value("epsilon", o.epsilon);
    o.batch_size = j.value("batch_size", o.batch_size);
    o.max_epochs = j.value("max_epochs", o.max_epochs);
    o.patience = j.value("patience", o.patience);
    o.lr_decay = j.value("lr_decay", o.lr_decay);
    if (!(o.learning_rate > 0.0)) throw ConfigError("optimizer learning_rate must be > 0");
    if (o.batch_size == 0) throw ConfigError("optimizer batch_size must be >= 1");
    return o;
}

inline json optimizer_to_json(const OptimizerConfig& o) {
    return {{"learning_rate", o.learning_rate}, {"beta1", o.beta1},         {"beta2", o.beta2},
            {"epsilon", o.epsilon},             {"batch_size", o.batch_size}, {"max_epochs", o.max_epochs},
            {"patience", o.patience},           {"lr_decay", o.lr_decay}};
}

} // namespace detail

[[nodiscard]] inline SynthSpec parse_synth_spec(const json& j) {
    try {
        SynthSpec s;
        s.generator = parse_generator(j.at("generator").get<std::string>());
        s.rates = j.value("rates", std::vector<double>{});
        s.mu = j.value("mu", std::vector<double>{});
        s.alpha = j.value("alpha", std::vector<double>{});
        s.decay = j.value("decay", std::vector<double>{});
        for (const auto& b : j.value("budgets", json::array())) {
            s.budgets.push_back({b.at("type").get<TypeId>(), b.at("max_count").get<std::size_t>()});
        }
        s.num_seqs = j.value("num_seqs", s.num_seqs);
        s.horizon = j.value("horizon", s.horizon);
        s.seed = j.value("seed", s.seed);
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("synth spec: ") + e.what());
    }
}

[[nodiscard]] inline json synth_spec_to_json(const SynthSpec& s) {
    json budgets = json::array();
    for (const auto& b : s.budgets) budgets.push_back({{"type", b.type}, {"max_count", b.max_count}});
    json j{{"generator", generator_name(s.generator)}, {"num_seqs", s.num_seqs}, {"horizon", s.horizon},
           {"seed", s.seed}};
    if (s.generator == Generator::kPoisson) {
        j["rates"] = s.rates;
    } else {
        j["mu"] = s.mu;
        j["alpha"] = s.alpha;
        j["decay"] = s.decay;
    }
    if (!budgets.empty()) j["budgets"] = budgets;
    return j;
}

/// Parses a config object; relative data paths resolve against `base_dir`. When
/// `require_paths` is set and no synth block is present, every data file must exist.
[[nodiscard]] inline ExperimentConfig parse_experiment_config(const json& j, const std::filesystem::path& base_dir,
                                                              bool require_paths = true) {
    ExperimentConfig c;
    try {
        c.seed = j.value("seed", c.seed);
        c.num_types = j.at("num_types").get<std::size_t>();
        if (c.num_types == 0) throw ConfigError("num_types must be >= 1");
        c.time_unit = j.value("time_unit", c.time_unit);
        c.histogram_bins = j.value("histogram_bins", c.histogram_bins);
        if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();

        auto resolve = [&](const std::string& p) {
            std::filesystem::path path(p);
            return path.is_absolute() ? path : base_dir / path;
        };
        if (j.contains("data")) {
            const auto& d = j["data"];
            c.data.train = resolve(d.at("train").get<std::string>());
            c.data.dev = resolve(d.value("dev", std::string{}));
            c.data.test = resolve(d.at("test").get<std::string>());
            if (d.value("dev", std::string{}).empty()) c.data.dev.clear();
        }
        if (j.contains("synth")) {
            SynthSplits s;
            s.spec = parse_synth_spec(j["synth"]);
            const json counts = j["synth"].value("counts", json::object());
            s.train = counts.value("train", s.train);
            s.dev = counts.value("dev", s.dev);
            s.test = counts.value("test", s.test);
            if (s.spec.num_types() != c.num_types) throw ConfigError("synth spec K differs from num_types");
            c.synth = s;
        }
        if (!c.synth && !j.contains("data")) throw ConfigError("config needs a \"data\" or \"synth\" block");
        if (require_paths && !c.synth) {
            for (const auto* p : {&c.data.train, &c.data.dev, &c.data.test}) {
                if (!p->empty() && !std::filesystem::exists(*p)) {
                    throw ConfigError("data file '" + p->string() + "' does not exist");
                }
            }
        }

        const json h = j.value("horizon", json::object());
        const std::string policy = h.value("policy", std::string("length"));
        if (policy == "length") {
            c.horizon.kind = HorizonPolicy::Kind::kLength;
            c.horizon.length = h.value("length", c.horizon.length);
            if (!(c.horizon.length > 0.0)) throw ConfigError("horizon length must be > 0");
        } else if (policy == "absolute") {
            c.horizon.kind = HorizonPolicy::Kind::kAbsolute;
            c.horizon.T = h.at("T").get<double>();
            c.horizon.T_prime = h.at("T_prime").get<double>();
            if (!(c.horizon.T < c.horizon.T_prime)) throw ConfigError("horizon needs T < T_prime");
        } else if (policy == "token_budget") {
            c.horizon.kind = HorizonPolicy::Kind::kTokenBudget;
            c.horizon.tokens = h.value("tokens", c.horizon.tokens);
        } else {
            throw ConfigError("unknown horizon policy '" + policy + "'");
        }

        const json base = j.value("base", json::object());
        c.base_family = parse_family(base.value("family", std::string("hawkes_exp")));
        c.base_optimizer = detail::parse_optimizer(base.value("optimizer", json::object()), c.base_optimizer);

        const json en = j.value("energy", json::object());
        c.features.num_types = c.num_types;
        c.features.window_count = en.value("window_count", c.features.window_count);
        c.features.time_basis_count = en.value("time_basis_count", c.features.time_basis_count);
        c.hidden = en.value("hidden", c.hidden);
        c.features.validate();

        const json tr = j.value("train", json::object());
        c.train.objective = parse_objective(tr.value("objective", std::string("multi")));
        c.train.num_noise = tr.value("num_noise", c.train.num_noise);
        c.train.beta = tr.value("beta", c.train.beta);
        c.train.regularize = tr.value("regularize", c.train.regularize);
        c.train.reg_weight = tr.value("reg_weight", c.train.reg_weight);
        c.train.margin_c_del = tr.value("margin_c_del", c.train.margin_c_del);
        c.train.fresh_noise = tr.value("fresh_noise", c.train.fresh_noise);
        c.train.optimizer = detail::parse_optimizer(tr.value("optimizer", json::object()), c.train.optimizer);
        c.train.validate();

        const json inf = j.value("infer", json::object());
        c.infer.num_proposals = inf.value("num_proposals", c.infer.num_proposals);
        c.infer.validate();

        const json o = j.value("otd", json::object());
        c.otd.c_del = o.value("c_del", c.otd.c_del);
        c.otd.c_del_grid = o.value("c_del_grid", c.otd.c_del_grid);
        c.otd.validate();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

[[nodiscard]] inline ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                                             bool require_paths = true) {
    return parse_experiment_config(read_json_file(path), path.parent_path(), require_paths);
}

[[nodiscard]] inline json experiment_config_to_json(const ExperimentConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["num_types"] = c.num_types;
    j["time_unit"] = c.time_unit;
    j["histogram_bins"] = c.histogram_bins;
    if (c.synth) {
        j["synth"] = synth_spec_to_json(c.synth->spec);
        j["synth"]["counts"] = {{"train", c.synth->train}, {"dev", c.synth->dev}, {"test", c.synth->test}};
    } else {
        j["data"] = {{"train", c.data.train.string()}, {"dev", c.data.dev.string()}, {"test", c.data.test.string()}};
    }
    switch (c.horizon.kind) {
        case HorizonPolicy::Kind::kLength: j["horizon"] = {{"policy", "length"}, {"length", c.horizon.length}}; break;
        case HorizonPolicy::Kind::kAbsolute:
            j["horizon"] = {{"policy", "absolute"}, {"T", c.horizon.T}, {"T_prime", c.horizon.T_prime}};
            break;
        case HorizonPolicy::Kind::kTokenBudget:
            j["horizon"] = {{"policy", "token_budget"}, {"tokens", c.horizon.tokens}};
            break;
    }
    j["base"] = {{"family", family_name(c.base_family)}, {"optimizer", detail::optimizer_to_json(c.base_optimizer)}};
    j["energy"] = {{"window_count", c.features.window_count},
                   {"time_basis_count", c.features.time_basis_count},
                   {"hidden", c.hidden}};
    j["train"] = {{"objective", objective_name(c.train.objective)},
                  {"num_noise", c.train.num_noise},
                  {"beta", c.train.beta},
                  {"regularize", c.train.regularize},
                  {"reg_weight", c.train.reg_weight},
                  {"margin_c_del", c.train.margin_c_del},
                  {"fresh_noise", c.train.fresh_noise},
                  {"optimizer", detail::optimizer_to_json(c.train.optimizer)}};
    j["infer"] = {{"num_proposals", c.infer.num_proposals}};
    j["otd"] = {{"c_del", c.otd.c_del}, {"c_del_grid", c.otd.c_del_grid}};
    return j;
}

/// Cuts every sequence according to the policy. Sequences the policy cannot split
/// (too short, window outside the sequence) are skipped; their ids are returned.
struct SplitSet {
    std::vector<std::string> ids;
    std::vector<HorizonSplit> splits;
    std::vector<std::string> skipped;
};

[[nodiscard]] inline SplitSet make_splits(const Dataset& d, const HorizonPolicy& policy) {
    SplitSet out;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto& s = d.sequences[i];
        try {
            HorizonSplit split;
            switch (policy.kind) {
                case HorizonPolicy::Kind::kLength:
                    split = split_at_horizon(s, s.t_end() - policy.length, s.t_end());
                    break;
                case HorizonPolicy::Kind::kAbsolute: split = split_at_horizon(s, policy.T, policy.T_prime); break;
                case HorizonPolicy::Kind::kTokenBudget: split = split_by_token_budget(s, policy.tokens); break;
            }
            out.ids.push_back(d.id(i));
            out.splits.push_back(std::move(split));
        } catch (const Error&) {
            out.skipped.push_back(d.id(i));
        }
    }
    if (!out.skipped.empty()) {
        warn("horizon policy skipped " + std::to_string(out.skipped.size()) + " sequence(s)");
    }
    return out;
}

} // namespace hypro
