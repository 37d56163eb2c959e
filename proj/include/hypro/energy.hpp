#pragma once

#include "hypro/core.hpp"
#include "hypro/error.hpp"
#include "hypro/rng.hpp"

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace hypro {

struct FeatureConfig {
    std::size_t num_types{1};
    std::size_t time_basis_count{8};  // sinusoid frequencies per encoded time
    std::size_t window_count{4};      // equal sub-windows of the continuation interval

    void validate() const {
        if (num_types == 0) throw ConfigError("feature config: num_types must be >= 1");
        if (time_basis_count == 0) throw ConfigError("feature config: time_basis_count must be >= 1");
        if (window_count == 0) throw ConfigError("feature config: window_count must be >= 1");
    }

    friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

/// K*(W+1) counts, 2 gap statistics, 4*B sinusoids, 1 length.
[[nodiscard]] constexpr std::size_t feature_dimension(const FeatureConfig& cfg) noexcept {
    return cfg.num_types * (cfg.window_count + 1) + 2 + 2 * cfg.time_basis_count * 2 + 1;
}

/// Global statistics of a completed sequence relative to its continuation interval (T, T'].
///
/// Layout:
///   [w*K + k]           count of type k in sub-window w of (T, T']
///   [W*K + k]           count of type k in the prefix tail [T - (T' - T), T]
///   next 2              mean and variance of continuation inter-arrival gaps (first gap
///                       measured from T), in units of the horizon length
///   next 2*B            sin/cos encodings of the first continuation time
///   next 2*B            sin/cos encodings of the last continuation time
///   last                number of continuation events
/// Continuation-derived slots are zero for an empty continuation.
[[nodiscard]] inline std::vector<double> featurize(const EventSequence& completed, double T, double T_prime,
                                                   const FeatureConfig& cfg) {
    const std::size_t k = cfg.num_types;
    const std::size_t w = cfg.window_count;
    const std::size_t b = cfg.time_basis_count;
    const double horizon = T_prime - T;
    if (!(horizon > 0.0)) throw RangeError("featurize needs T < T_prime");

    std::vector<double> x(feature_dimension(cfg), 0.0);
    const std::size_t tail_base = w * k;
    const std::size_t gap_base = tail_base + k;
    const std::size_t first_base = gap_base + 2;
    const std::size_t last_base = first_base + 2 * b;
    const std::size_t len_slot = last_base + 2 * b;

    std::vector<double> gaps;
    double prev = T;
    double first = 0.0;
    double last = 0.0;
    for (const auto& e : completed) {
        if (e.type >= k) throw SchemaError("event type " + std::to_string(e.type) + " >= K in featurize");
        if (e.time <= T) {
            if (e.time >= T - horizon) x[tail_base + e.type] += 1.0;
            continue;
        }
        if (e.time > T_prime) continue;
        const double u = (e.time - T) / horizon;
        const auto win = std::min<std::size_t>(w - 1, static_cast<std::size_t>(u * static_cast<double>(w)));
        x[win * k + e.type] += 1.0;
        if (gaps.empty()) first = u;
        last = u;
        gaps.push_back((e.time - prev) / horizon);
        prev = e.time;
    }

    if (!gaps.empty()) {
        double mean = 0.0;
        for (double g : gaps) mean += g;
        mean /= static_cast<double>(gaps.size());
        double var = 0.0;
        for (double g : gaps) var += (g - mean) * (g - mean);
        var /= static_cast<double>(gaps.size());
        x[gap_base] = mean;
        x[gap_base + 1] = var;
        for (std::size_t f = 0; f < b; ++f) {
            const double omega = std::numbers::pi * static_cast<double>(f + 1);
            x[first_base + 2 * f] = std::sin(omega * first);
            x[first_base + 2 * f + 1] = std::cos(omega * first);
            x[last_base + 2 * f] = std::sin(omega * last);
            x[last_base + 2 * f + 1] = std::cos(omega * last);
        }
        x[len_slot] = static_cast<double>(gaps.size());
    }
    return x;
}

[[nodiscard]] inline std::vector<double> featurize(const EventSequence& completed, const HorizonSplit& split,
                                                   const FeatureConfig& cfg) {
    return featurize(completed, split.T, split.T_prime, cfg);
}

struct EnergyValue {
    double value{0.0};
    std::vector<double> gradient;  // over the flat parameter vector
};

/// Scalar energy of a completed sequence: standardized features fed through an MLP
/// with tanh hidden units and a single linear output.
class EnergyFunction {
public:
    EnergyFunction() = default;

    /// Hidden weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); the output layer starts at zero
    /// so the initial energy is identically zero.
    EnergyFunction(const FeatureConfig& features, const std::vector<std::size_t>& hidden, RngStream& rng)
        : features_(features) {
        features_.validate();
        layers_.push_back(feature_dimension(features_));
        for (std::size_t h : hidden) {
            if (h == 0) throw ConfigError("hidden layer width must be >= 1");
            layers_.push_back(h);
        }
        layers_.push_back(1);
        theta_.assign(count_parameters(layers_), 0.0);
        std::size_t off = 0;
        for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
            const std::size_t in = layers_[l];
            const std::size_t out = layers_[l + 1];
            const bool output_layer = l + 2 == layers_.size();
            const double scale = 1.0 / std::sqrt(static_cast<double>(in));
            for (std::size_t i = 0; i < in * out; ++i) {
                theta_[off + i] = output_layer ? 0.0 : (2.0 * rng.uniform() - 1.0) * scale;
            }
            off += in * out;
            for (std::size_t i = 0; i < out; ++i) theta_[off + i] = output_layer ? 0.0 : (2.0 * rng.uniform() - 1.0) * scale;
            off += out;
        }
        feature_mean_.assign(layers_.front(), 0.0);
        feature_scale_.assign(layers_.front(), 1.0);
    }

    /// Restores a persisted function; `layers` includes the input and output widths.
    EnergyFunction(const FeatureConfig& features, std::vector<std::size_t> layers, std::vector<double> theta,
                   std::vector<double> feature_mean, std::vector<double> feature_scale)
        : features_(features),
          layers_(std::move(layers)),
          theta_(std::move(theta)),
          feature_mean_(std::move(feature_mean)),
          feature_scale_(std::move(feature_scale)) {
        features_.validate();
        if (layers_.size() < 2 || layers_.front() != feature_dimension(features_) || layers_.back() != 1) {
            throw FormatError("energy layer shapes do not match the feature configuration");
        }
        if (theta_.size() != count_parameters(layers_)) throw FormatError("energy parameter count mismatch");
        if (feature_mean_.size() != layers_.front() || feature_scale_.size() != layers_.front()) {
            throw FormatError("energy standardization size mismatch");
        }
    }

    [[nodiscard]] const FeatureConfig& features() const noexcept { return features_; }
    [[nodiscard]] const std::vector<std::size_t>& layers() const noexcept { return layers_; }
    [[nodiscard]] std::size_t num_parameters() const noexcept { return theta_.size(); }
    [[nodiscard]] std::span<const double> parameters() const noexcept { return theta_; }
    [[nodiscard]] std::span<double> parameters() noexcept { return theta_; }
    [[nodiscard]] const std::vector<double>& feature_mean() const noexcept { return feature_mean_; }
    [[nodiscard]] const std::vector<double>& feature_scale() const noexcept { return feature_scale_; }

    void set_parameters(std::span<const double> theta) {
        if (theta.size() != theta_.size()) throw PreconditionError("energy parameter count mismatch");
        theta_.assign(theta.begin(), theta.end());
    }

    void set_standardization(std::vector<double> mean, std::vector<double> scale) {
        if (mean.size() != layers_.front() || scale.size() != layers_.front()) {
            throw PreconditionError("standardization size mismatch");
        }
        for (double& s : scale) {
            if (!(s > 1e-12) || !std::isfinite(s)) s = 1.0;
        }
        feature_mean_ = std::move(mean);
        feature_scale_ = std::move(scale);
    }

    /// Per-dimension mean and standard deviation of the given feature rows.
    void fit_standardization(const std::vector<std::vector<double>>& rows) {
        const std::size_t d = layers_.front();
        std::vector<double> mean(d, 0.0);
        std::vector<double> sd(d, 0.0);
        if (rows.empty()) return;
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < d; ++i) mean[i] += r[i];
        }
        for (double& m : mean) m /= static_cast<double>(rows.size());
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < d; ++i) sd[i] += (r[i] - mean[i]) * (r[i] - mean[i]);
        }
        for (double& s : sd) s = std::sqrt(s / static_cast<double>(rows.size()));
        set_standardization(std::move(mean), std::move(sd));
    }

    [[nodiscard]] double evaluate(std::span<const double> raw_features) const {
        return forward(raw_features, nullptr);
    }

    /// Value plus gradient w.r.t. every parameter; features are treated as constants.
    [[nodiscard]] EnergyValue evaluate_with_gradient(std::span<const double> raw_features) const {
        EnergyValue out;
        out.gradient.assign(theta_.size(), 0.0);
        out.value = forward(raw_features, &out.gradient);
        return out;
    }

    [[nodiscard]] static std::size_t count_parameters(const std::vector<std::size_t>& layers) noexcept {
        std::size_t n = 0;
        for (std::size_t l = 0; l + 1 < layers.size(); ++l) n += layers[l] * layers[l + 1] + layers[l + 1];
        return n;
    }

private:
    double forward(std::span<const double> raw, std::vector<double>* grad) const {
        const std::size_t d = layers_.front();
        if (raw.size() != d) throw PreconditionError("feature vector has wrong dimension");
        std::vector<std::vector<double>> acts(layers_.size());
        acts[0].resize(d);
        for (std::size_t i = 0; i < d; ++i) acts[0][i] = (raw[i] - feature_mean_[i]) / feature_scale_[i];

        std::vector<std::size_t> offsets(layers_.size() - 1);
        std::size_t off = 0;
        for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
            offsets[l] = off;
            const std::size_t in = layers_[l];
            const std::size_t out = layers_[l + 1];
            const bool hidden = l + 2 < layers_.size();
            const double* w = theta_.data() + off;
            const double* bias = w + in * out;
            acts[l + 1].resize(out);
            for (std::size_t o = 0; o < out; ++o) {
                double z = bias[o];
                for (std::size_t i = 0; i < in; ++i) z += w[o * in + i] * acts[l][i];
                acts[l + 1][o] = hidden ? std::tanh(z) : z;
            }
            off += in * out + out;
        }
        const double value = acts.back()[0];
        if (grad == nullptr) return value;

        std::vector<double> delta{1.0};
        for (std::size_t l = layers_.size() - 1; l-- > 0;) {
            const std::size_t in = layers_[l];
            const std::size_t out = layers_[l + 1];
            const double* w = theta_.data() + offsets[l];
            double* gw = grad->data() + offsets[l];
            double* gb = gw + in * out;
            for (std::size_t o = 0; o < out; ++o) {
                gb[o] += delta[o];
                for (std::size_t i = 0; i < in; ++i) gw[o * in + i] += delta[o] * acts[l][i];
            }
            if (l == 0) break;
            std::vector<double> prev(in, 0.0);
            for (std::size_t o = 0; o < out; ++o) {
                for (std::size_t i = 0; i < in; ++i) prev[i] += w[o * in + i] * delta[o];
            }
            for (std::size_t i = 0; i < in; ++i) prev[i] *= 1.0 - acts[l][i] * acts[l][i];
            delta = std::move(prev);
        }
        return value;
    }

    FeatureConfig features_;
    std::vector<std::size_t> layers_;
    std::vector<double> theta_;
    std::vector<double> feature_mean_;
    std::vector<double> feature_scale_;
};

[[nodiscard]] inline double energy(const EnergyFunction& fn, const EventSequence& completed,
                                   const HorizonSplit& split) {
    return fn.evaluate(featurize(completed, split, fn.features()));
}

[[nodiscard]] inline EnergyValue energy_grad(const EnergyFunction& fn, const EventSequence& completed,
                                             const HorizonSplit& split) {
    return fn.evaluate_with_gradient(featurize(completed, split, fn.features()));
}

} // namespace hypro
