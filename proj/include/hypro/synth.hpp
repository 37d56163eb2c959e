#pragma once

#include "hypro/core.hpp"
#include "hypro/error.hpp"
#include "hypro/intensity.hpp"
#include "hypro/parallel.hpp"
#include "hypro/rng.hpp"
#include "hypro/thinning.hpp"

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace hypro {

enum class Generator { kPoisson, kHawkes, kHawkesBudgeted };

[[nodiscard]] inline std::string_view generator_name(Generator g) {
    switch (g) {
        case Generator::kPoisson: return "poisson";
        case Generator::kHawkes: return "hawkes";
        case Generator::kHawkesBudgeted: return "hawkes_budgeted";
    }
    return "unknown";
}

[[nodiscard]] inline Generator parse_generator(std::string_view s) {
    if (s == "poisson") return Generator::kPoisson;
    if (s == "hawkes") return Generator::kHawkes;
    if (s == "hawkes_budgeted") return Generator::kHawkesBudgeted;
    throw ConfigError("unknown generator '" + std::string(s) + "'");
}

struct TypeBudget {
    TypeId type{0};
    std::size_t max_count{0};
};

struct SynthSpec {
    Generator generator{Generator::kPoisson};
    std::vector<double> rates;  // poisson
    std::vector<double> mu;     // hawkes: K
    std::vector<double> alpha;  // hawkes: K*K, row = source type
    std::vector<double> decay;  // hawkes: K*K
    std::vector<TypeBudget> budgets;
    std::size_t num_seqs{100};
    double horizon{10.0};
    std::uint64_t seed{0};

    [[nodiscard]] std::size_t num_types() const {
        return generator == Generator::kPoisson ? rates.size() : mu.size();
    }

    void validate() const {
        if (num_types() == 0) throw ConfigError("synth spec has no event types");
        if (!(horizon > 0.0)) throw ConfigError("synth horizon must be > 0");
        if (generator != Generator::kPoisson) {
            const std::size_t k = mu.size();
            if (alpha.size() != k * k || decay.size() != k * k) {
                throw ConfigError("synth hawkes alpha/decay must have K*K entries");
            }
        }
        if (generator == Generator::kHawkesBudgeted && budgets.empty()) {
            throw ConfigError("hawkes_budgeted needs at least one type budget");
        }
        for (const auto& b : budgets) {
            if (b.type >= num_types()) throw ConfigError("budget type out of range");
        }
    }

    [[nodiscard]] std::unique_ptr<IntensityModel> model() const {
        if (generator == Generator::kPoisson) return std::make_unique<PoissonModel>(rates);
        return std::make_unique<HawkesExpModel>(mu, alpha, decay);
    }
};

// Rejection rate above which a budget is considered infeasible.
inline constexpr double kMaxRejectionRate = 0.999;
// Attempts allowed for any single sequence.
inline constexpr std::size_t kMaxAttemptsPerSequence = 100000;

[[nodiscard]] inline bool within_budgets(const EventSequence& seq, const std::vector<TypeBudget>& budgets,
                                         std::size_t num_types) {
    const auto counts = seq.type_counts(num_types);
    for (const auto& b : budgets) {
        if (counts[b.type] > b.max_count) return false;
    }
    return true;
}

/// Rollouts of the true model over [0, horizon]. For hawkes_budgeted each rollout
/// is redrawn until every capped type is within its budget. Sequence i uses substream i.
[[nodiscard]] inline Dataset generate(const SynthSpec& spec, const RngStream& rng) {
    spec.validate();
    const auto model = spec.model();
    const std::size_t k = spec.num_types();
    const EventSequence empty({}, 0.0, 0.0);

    Dataset d;
    d.num_types = k;
    d.time_unit = "1";
    d.sequences.resize(spec.num_seqs);
    d.ids.resize(spec.num_seqs);
    std::vector<std::size_t> attempts(spec.num_seqs, 0);
    parallel_for(spec.num_seqs, [&](std::size_t i) {
        RngStream sub = rng.substream(i);
        for (;;) {
            ++attempts[i];
            EventSequence s = thinning_sample(*model, empty, spec.horizon, sub);
            if (spec.generator != Generator::kHawkesBudgeted || within_budgets(s, spec.budgets, k)) {
                d.sequences[i] = EventSequence(s.events(), 0.0, spec.horizon);
                break;
            }
            if (attempts[i] >= kMaxAttemptsPerSequence) {
                throw ConfigError("budget constraint too tight: sequence " + std::to_string(i) + " rejected " +
                                  std::to_string(attempts[i]) + " rollouts");
            }
        }
        d.ids[i] = "synth-" + std::to_string(i);
    });
    std::size_t total = 0;
    for (std::size_t a : attempts) total += a;
    if (total > 0) {
        const double rejection = 1.0 - static_cast<double>(spec.num_seqs) / static_cast<double>(total);
        if (rejection > kMaxRejectionRate) {
            throw ConfigError("budget constraint too tight: rejection rate " + std::to_string(rejection));
        }
    }
    return d;
}

[[nodiscard]] inline Dataset generate(const SynthSpec& spec) {
    return generate(spec, RngStream(spec.seed).substream("synth"));
}

} // namespace hypro
