#pragma once

#include "hypro/core.hpp"
#include "hypro/energy.hpp"
#include "hypro/error.hpp"
#include "hypro/intensity.hpp"
#include "hypro/metrics.hpp"
#include "hypro/optim.hpp"
#include "hypro/parallel.hpp"
#include "hypro/rng.hpp"
#include "hypro/thinning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace hypro {

enum class NceObjective { kBinary, kMulti };

[[nodiscard]] inline std::string_view objective_name(NceObjective o) {
    return o == NceObjective::kBinary ? "binary" : "multi";
}

[[nodiscard]] inline NceObjective parse_objective(std::string_view s) {
    if (s == "binary") return NceObjective::kBinary;
    if (s == "multi") return NceObjective::kMulti;
    throw ConfigError("unknown NCE objective '" + std::string(s) + "'");
}

struct TrainConfig {
    NceObjective objective{NceObjective::kMulti};
    std::size_t num_noise{5};
    double beta{1.0};
    bool regularize{false};
    double reg_weight{1.0};
    // Deletion cost of the OTD used as the margin distance.
    double margin_c_del{1.0};
    // Redraw noise every epoch; false reuses the first epoch's draws.
    bool fresh_noise{true};
    OptimizerConfig optimizer{};

    void validate() const {
        if (num_noise == 0) throw ConfigError("train config: N must be >= 1");
        if (regularize && !(beta > 0.0)) throw ConfigError("train config: beta must be > 0 when regularizing");
        if (!(margin_c_del > 0.0)) throw ConfigError("train config: margin c_del must be > 0");
        if (!(reg_weight >= 0.0)) throw ConfigError("train config: reg_weight must be >= 0");
    }
};

/// Loss value and d(loss)/d(energy_n) for the positive (n = 0) and N noise energies.
struct LossAndPartials {
    double loss{0.0};
    std::vector<double> partials;
};

/// Negated Binary-NCE objective: softplus(E_0) + sum_{n>=1} softplus(-E_n).
[[nodiscard]] inline LossAndPartials binary_nce_loss(std::span<const double> energies) {
    if (energies.size() < 2) throw PreconditionError("NCE needs a positive and at least one noise energy");
    LossAndPartials out;
    out.partials.resize(energies.size());
    out.loss = softplus(energies[0]);
    out.partials[0] = sigmoid(energies[0]);
    for (std::size_t n = 1; n < energies.size(); ++n) {
        out.loss += softplus(-energies[n]);
        out.partials[n] = -sigmoid(-energies[n]);
    }
    return out;
}

/// Negated Multi-NCE objective: E_0 + log sum_n exp(-E_n).
[[nodiscard]] inline LossAndPartials multi_nce_loss(std::span<const double> energies) {
    if (energies.size() < 2) throw PreconditionError("NCE needs a positive and at least one noise energy");
    LossAndPartials out;
    out.partials.resize(energies.size());
    double top = -std::numeric_limits<double>::infinity();
    for (double e : energies) top = std::max(top, -e);
    double z = 0.0;
    for (double e : energies) z += std::exp(-e - top);
    out.loss = energies[0] + (top + std::log(z));
    for (std::size_t n = 0; n < energies.size(); ++n) {
        out.partials[n] = (n == 0 ? 1.0 : 0.0) - std::exp(-energies[n] - top) / z;
    }
    return out;
}

/// Hinge margin sum_n max(0, beta d_n + E_0 - E_n); an exactly-zero margin is inactive.
[[nodiscard]] inline LossAndPartials distance_margin_reg(std::span<const double> energies,
                                                         std::span<const double> distances, double beta) {
    if (energies.size() != distances.size() + 1) {
        throw PreconditionError("margin regularizer needs one distance per noise energy");
    }
    LossAndPartials out;
    out.partials.assign(energies.size(), 0.0);
    for (std::size_t n = 0; n < distances.size(); ++n) {
        if (distances[n] < 0.0) throw PreconditionError("margin distances must be non-negative");
        const double margin = beta * distances[n] + energies[0] - energies[n + 1];
        if (margin > 0.0) {
            out.loss += margin;
            out.partials[0] += 1.0;
            out.partials[n + 1] -= 1.0;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

/// A positive completion and N noise completions sharing one observed prefix.
struct ContrastiveBatch {
    HorizonSplit split;
    EventSequence positive;
    std::vector<EventSequence> noises;
};

[[nodiscard]] inline ContrastiveBatch make_contrastive_batch(const HorizonSplit& split,
                                                             const std::vector<EventSequence>& continuations) {
    ContrastiveBatch b{split, concatenate(split.prefix, split.truth), {}};
    b.noises.reserve(continuations.size());
    for (const auto& c : continuations) b.noises.push_back(concatenate(split.prefix, c));
    return b;
}

/// Feature rows (row 0 = positive) and truth-to-noise distances of one batch.
struct ContrastiveFeatures {
    std::vector<std::vector<double>> rows;
    std::vector<double> distances;
};

[[nodiscard]] inline ContrastiveFeatures prepare_features(const ContrastiveBatch& batch, const FeatureConfig& cfg,
                                                          bool with_distances, double c_del) {
    ContrastiveFeatures f;
    f.rows.push_back(featurize(batch.positive, batch.split, cfg));
    for (const auto& noise : batch.noises) {
        f.rows.push_back(featurize(noise, batch.split, cfg));
        if (with_distances) {
            f.distances.push_back(otd(batch.split.truth, slice(noise, batch.split.T, batch.split.T_prime), c_del));
        }
    }
    return f;
}

struct ContrastiveLoss {
    double objective{0.0};
    double omega{0.0};
    [[nodiscard]] double total(double reg_weight) const noexcept { return objective + reg_weight * omega; }
};

/// Loss of one contrastive group; adds d(loss)/d(theta) into `grad` when non-empty.
inline ContrastiveLoss contrastive_loss(const EnergyFunction& fn, const ContrastiveFeatures& feats,
                                        const TrainConfig& cfg, std::span<double> grad = {}) {
    const std::size_t n = feats.rows.size();
    std::vector<double> energies(n);
    std::vector<std::vector<double>> grads;
    if (!grad.empty()) grads.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (grad.empty()) {
            energies[i] = fn.evaluate(feats.rows[i]);
        } else {
            EnergyValue v = fn.evaluate_with_gradient(feats.rows[i]);
            energies[i] = v.value;
            grads[i] = std::move(v.gradient);
        }
    }
    LossAndPartials main =
        cfg.objective == NceObjective::kBinary ? binary_nce_loss(energies) : multi_nce_loss(energies);
    ContrastiveLoss out{main.loss, 0.0};
    if (cfg.regularize) {
        const LossAndPartials reg = distance_margin_reg(energies, feats.distances, cfg.beta);
        out.omega = reg.loss;
        for (std::size_t i = 0; i < n; ++i) main.partials[i] += cfg.reg_weight * reg.partials[i];
    }
    if (!grad.empty()) {
        for (std::size_t i = 0; i < n; ++i) {
            const double w = main.partials[i];
            if (w == 0.0) continue;
            for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += w * grads[i][p];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

struct NceEpochRecord {
    std::size_t epoch{0};
    double train_loss{0.0};  // mean per group, objective + weighted margin term
    double dev_loss{0.0};
    double omega{0.0};       // mean margin term on the training groups
    double wall_ms{0.0};
};

struct NceResult {
    EnergyFunction energy;
    std::vector<NceEpochRecord> log;
    std::size_t best_epoch{0};
    double best_dev_loss{0.0};
};

/// Draws noise for every split and prepares contrastive features. Split i uses
/// substream i of `stream`.
[[nodiscard]] inline std::vector<ContrastiveFeatures> sample_contrastive_features(
    const IntensityModel& base, const std::vector<HorizonSplit>& splits, const FeatureConfig& features,
    const TrainConfig& cfg, const RngStream& stream) {
    std::vector<ContrastiveFeatures> out(splits.size());
    parallel_for(splits.size(), [&](std::size_t i) {
        const auto& s = splits[i];
        const auto noise = draw_noise(base, s.prefix, s.T_prime, cfg.num_noise, stream.substream(i));
        out[i] = prepare_features(make_contrastive_batch(s, noise), features, cfg.regularize, cfg.margin_c_del);
    });
    return out;
}

/// Mean per-group loss over pre-sampled features.
[[nodiscard]] inline ContrastiveLoss mean_contrastive_loss(const EnergyFunction& fn,
                                                           const std::vector<ContrastiveFeatures>& groups,
                                                           const TrainConfig& cfg) {
    std::vector<ContrastiveLoss> per(groups.size());
    parallel_for(groups.size(), [&](std::size_t i) { per[i] = contrastive_loss(fn, groups[i], cfg); });
    ContrastiveLoss sum;
    for (const auto& l : per) {
        sum.objective += l.objective;
        sum.omega += l.omega;
    }
    if (!groups.empty()) {
        sum.objective /= static_cast<double>(groups.size());
        sum.omega /= static_cast<double>(groups.size());
    }
    return sum;
}

/// NCE training of the energy against a frozen base model. Records epoch 0 (before
/// any update) and every completed epoch; returns the best-dev parameters. Feature
/// standardization is fitted on the first epoch's positives and noise and then frozen.
[[nodiscard]] inline NceResult train_energy(const IntensityModel& base, EnergyFunction energy,
                                            const std::vector<HorizonSplit>& train,
                                            const std::vector<HorizonSplit>& dev, const TrainConfig& cfg,
                                            const RngStream& rng,
                                            const std::function<void(const NceEpochRecord&)>& on_epoch = {}) {
    cfg.validate();
    if (train.empty()) throw PreconditionError("train_energy needs at least one training split");
    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    const RngStream noise_stream = rng.substream("noise");
    RngStream order_stream = rng.substream("order");
    const FeatureConfig& fc = energy.features();

    std::vector<ContrastiveFeatures> groups =
        sample_contrastive_features(base, train, fc, cfg, noise_stream.substream(std::uint64_t{1}));
    {
        std::vector<std::vector<double>> rows;
        for (const auto& g : groups) rows.insert(rows.end(), g.rows.begin(), g.rows.end());
        energy.fit_standardization(rows);
    }
    const std::vector<HorizonSplit>& dev_splits = dev.empty() ? train : dev;
    const std::vector<ContrastiveFeatures> dev_groups =
        sample_contrastive_features(base, dev_splits, fc, cfg, rng.substream("dev-noise"));

    NceResult result;
    auto wall = [&] { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); };
    auto emit = [&](const NceEpochRecord& r) {
        result.log.push_back(r);
        if (on_epoch) on_epoch(r);
    };

    {
        const ContrastiveLoss tr = mean_contrastive_loss(energy, groups, cfg);
        const ContrastiveLoss dv = mean_contrastive_loss(energy, dev_groups, cfg);
        emit({0, tr.total(cfg.reg_weight), dv.total(cfg.reg_weight), tr.omega, wall()});
        result.best_dev_loss = dv.total(cfg.reg_weight);
    }
    std::vector<double> best(energy.parameters().begin(), energy.parameters().end());
    std::size_t since_best = 0;

    const std::size_t dim = energy.num_parameters();
    Adam adam(dim, cfg.optimizer);
    std::vector<double> theta(best);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = std::max<std::size_t>(1, cfg.optimizer.batch_size);

    for (std::size_t epoch = 1; epoch <= cfg.optimizer.max_epochs; ++epoch) {
        if (epoch > 1 && cfg.fresh_noise) {
            groups = sample_contrastive_features(base, train, fc, cfg, noise_stream.substream(epoch));
        }
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_stream.below(i)]);

        double loss_sum = 0.0;
        double omega_sum = 0.0;
        std::vector<std::vector<double>> member_grad;
        std::vector<ContrastiveLoss> member_loss;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t n = std::min(order.size(), start + batch) - start;
            member_grad.assign(n, std::vector<double>(dim, 0.0));
            member_loss.assign(n, {});
            parallel_for(n, [&](std::size_t j) {
                member_loss[j] = contrastive_loss(energy, groups[order[start + j]], cfg, member_grad[j]);
            });
            std::vector<double> grad(dim, 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                const double total = member_loss[j].total(cfg.reg_weight);
                if (!std::isfinite(total)) {
                    std::ostringstream os;
                    os << "non-finite NCE loss at epoch " << epoch << " on training split " << order[start + j]
                       << " (objective " << member_loss[j].objective << ", omega " << member_loss[j].omega << ')';
                    throw NumericalError(os.str());
                }
                loss_sum += total;
                omega_sum += member_loss[j].omega;
                for (std::size_t p = 0; p < dim; ++p) grad[p] += member_grad[j][p];
            }
            for (double& g : grad) g /= static_cast<double>(n);
            adam.step(theta, grad);
            energy.set_parameters(theta);
        }
        adam.end_epoch();

        const ContrastiveLoss dv = mean_contrastive_loss(energy, dev_groups, cfg);
        const double dev_loss = dv.total(cfg.reg_weight);
        if (!std::isfinite(dev_loss)) throw NumericalError("non-finite dev NCE loss at epoch " + std::to_string(epoch));
        const auto count = static_cast<double>(train.size());
        emit({epoch, loss_sum / count, dev_loss, omega_sum / count, wall()});

        if (dev_loss < result.best_dev_loss) {
            result.best_dev_loss = dev_loss;
            result.best_epoch = epoch;
            best = theta;
            since_best = 0;
        } else if (++since_best >= cfg.optimizer.patience) {
            break;
        }
    }
    energy.set_parameters(best);
    result.energy = std::move(energy);
    return result;
}

} // namespace hypro
