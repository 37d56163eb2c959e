#pragma once

#include "hypro/core.hpp"
#include "hypro/energy.hpp"
#include "hypro/error.hpp"
#include "hypro/intensity.hpp"
#include "hypro/parallel.hpp"
#include "hypro/rng.hpp"
#include "hypro/thinning.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace hypro {

enum class DecodeRule {
    kMostProbable,
    // Consensus decoding over the weighted set; not provided.
    kMinimumBayesRisk,
};

struct InferConfig {
    std::size_t num_proposals{20};
    DecodeRule decode{DecodeRule::kMostProbable};

    void validate() const {
        if (num_proposals == 0) throw ConfigError("infer config: M must be >= 1");
    }
};

struct WeightedProposal {
    EventSequence continuation;
    double weight{0.0};
    double energy{0.0};
};

struct Prediction {
    EventSequence chosen;
    std::size_t chosen_index{0};
    std::vector<WeightedProposal> proposals;  // in draw order
};

/// Self-normalized importance weights softmax(-E), max-shifted.
[[nodiscard]] inline std::vector<double> normalized_weights(std::span<const double> energies) {
    if (energies.empty()) throw PreconditionError("normalized_weights needs at least one energy");
    double top = -std::numeric_limits<double>::infinity();
    for (double e : energies) {
        if (!std::isfinite(e)) throw NumericalError("normalized_weights needs finite energies");
        top = std::max(top, -e);
    }
    std::vector<double> w(energies.size());
    double z = 0.0;
    for (std::size_t i = 0; i < energies.size(); ++i) {
        w[i] = std::exp(-energies[i] - top);
        z += w[i];
    }
    for (double& v : w) v /= z;
    return w;
}

/// Index of the lowest energy (largest weight); the earliest index wins ties.
[[nodiscard]] inline std::size_t argmax_weight(std::span<const double> energies) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < energies.size(); ++i) {
        if (energies[i] < energies[best]) best = i;
    }
    return best;
}

/// Normalized importance sampling: M proposals from the base model, reweighted by
/// exp(-energy) of each completed sequence. Proposal m uses substream m of `rng`.
[[nodiscard]] inline Prediction predict(const IntensityModel& base, const EnergyFunction& fn,
                                        const EventSequence& prefix, double T_prime, const InferConfig& cfg,
                                        const RngStream& rng) {
    cfg.validate();
    if (cfg.decode == DecodeRule::kMinimumBayesRisk) {
        throw ConfigError("minimum-Bayes-risk decoding is not available; use the most probable proposal");
    }
    if (!(T_prime > prefix.t_end())) throw RangeError("predict needs T_prime after the prefix end");
    const double T = prefix.t_end();
    const auto draws = draw_noise(base, prefix, T_prime, cfg.num_proposals, rng);
    std::vector<double> energies(draws.size());
    parallel_for(draws.size(), [&](std::size_t m) {
        energies[m] = fn.evaluate(featurize(concatenate(prefix, draws[m]), T, T_prime, fn.features()));
    });
    const auto weights = normalized_weights(energies);

    Prediction out;
    out.proposals.reserve(draws.size());
    for (std::size_t m = 0; m < draws.size(); ++m) out.proposals.push_back({draws[m], weights[m], energies[m]});
    out.chosen_index = argmax_weight(energies);
    out.chosen = out.proposals[out.chosen_index].continuation;
    return out;
}

} // namespace hypro
