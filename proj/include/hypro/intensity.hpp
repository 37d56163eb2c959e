#pragma once

#include "hypro/core.hpp"
#include "hypro/error.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace hypro {

enum class ModelFamily { kPoisson, kHawkesExp };

[[nodiscard]] inline std::string_view family_name(ModelFamily f) {
    switch (f) {
        case ModelFamily::kPoisson: return "poisson";
        case ModelFamily::kHawkesExp: return "hawkes_exp";
    }
    return "unknown";
}

[[nodiscard]] inline ModelFamily parse_family(std::string_view name) {
    if (name == "poisson") return ModelFamily::kPoisson;
    if (name == "hawkes_exp" || name == "hawkes") return ModelFamily::kHawkesExp;
    throw ConfigError("unknown model family '" + std::string(name) + "'");
}

// softplus(x) = log(1 + e^x), written to avoid overflow for large |x|.
[[nodiscard]] inline double softplus(double x) noexcept {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

[[nodiscard]] inline double inverse_softplus(double y) {
    if (!(y > 0.0)) throw RangeError("softplus parameters must be positive, got " + std::to_string(y));
    return y + std::log(-std::expm1(-y));
}

/// As inverse_softplus, but maps 0 to -infinity (softplus(-inf) is exactly 0).
[[nodiscard]] inline double inverse_softplus_nonneg(double y) {
    if (y == 0.0) return -std::numeric_limits<double>::infinity();
    if (!(y > 0.0)) throw RangeError("rates and excitations must be non-negative, got " + std::to_string(y));
    return inverse_softplus(y);
}

[[nodiscard]] inline double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

struct LogLikelihood {
    double value{0.0};
    // Some observed event had zero intensity; value is -infinity.
    bool degenerate{false};
};

/// Incremental intensity evaluator: holds a history and answers queries at times
/// at or after the most recent event.
class IntensityCursor {
public:
    virtual ~IntensityCursor() = default;
    /// Fills out[k] = lambda_k(t | history); t must not precede the last pushed event.
    virtual void intensities(double t, std::span<double> out) const = 0;
    /// Dominates the total intensity on (t0, next event].
    [[nodiscard]] virtual double bound(double t0) const = 0;
    virtual void push(const Event& e) = 0;
};

/// Conditional intensity lambda_k(t | history) of a temporal point process.
/// Parameters are exposed in an unconstrained (softplus-domain) coordinate system.
class IntensityModel {
public:
    virtual ~IntensityModel() = default;

    [[nodiscard]] virtual ModelFamily family() const = 0;
    [[nodiscard]] virtual std::size_t num_types() const = 0;
    [[nodiscard]] virtual std::unique_ptr<IntensityModel> clone() const = 0;

    [[nodiscard]] virtual std::size_t num_parameters() const = 0;
    [[nodiscard]] virtual std::vector<double> parameters() const = 0;
    virtual void set_parameters(std::span<const double> raw) = 0;

    [[nodiscard]] virtual std::unique_ptr<IntensityCursor> cursor(const EventSequence& history) const = 0;

    /// Integral of sum_k lambda_k over [ta, tb] when no event occurs inside.
    [[nodiscard]] virtual double integral(double ta, double tb, const EventSequence& history) const = 0;

    /// Log-likelihood of the sequence over its own window. When `grad` is non-empty
    /// the gradient w.r.t. the unconstrained parameters is added into it.
    virtual LogLikelihood log_likelihood(const EventSequence& seq, std::span<double> grad = {}) const = 0;
};

namespace detail {

inline void require_after_history(double t, const EventSequence& history, bool strict) {
    if (history.empty()) return;
    const double last = history.events().back().time;
    if (strict ? !(t > last) : !(t >= last)) {
        std::ostringstream os;
        os << "query time " << t << (strict ? " must be after" : " must not precede") << " last history event at "
           << last;
        throw OrderingError(os.str());
    }
}

} // namespace detail

/// lambda_k(t | history), requiring t after every history event.
[[nodiscard]] inline double intensity_at(const IntensityModel& model, TypeId k, double t,
                                         const EventSequence& history) {
    detail::require_after_history(t, history, /*strict=*/true);
    if (k >= model.num_types()) throw RangeError("type " + std::to_string(k) + " out of range");
    std::vector<double> lam(model.num_types());
    model.cursor(history)->intensities(t, lam);
    return lam[k];
}

[[nodiscard]] inline double thinning_upper_bound(const IntensityModel& model, double t0,
                                                 const EventSequence& history) {
    detail::require_after_history(t0, history, /*strict=*/false);
    return model.cursor(history)->bound(t0);
}

[[nodiscard]] inline double intensity_integral(const IntensityModel& model, double ta, double tb,
                                               const EventSequence& history) {
    detail::require_after_history(ta, history, /*strict=*/false);
    return model.integral(ta, tb, history);
}

[[nodiscard]] inline LogLikelihood log_likelihood(const IntensityModel& model, const EventSequence& seq) {
    return model.log_likelihood(seq);
}

// ---------------------------------------------------------------------------

class PoissonModel final : public IntensityModel {
public:
    explicit PoissonModel(std::vector<double> rates) : raw_(rates.size()) {
        if (rates.empty()) throw PreconditionError("Poisson model needs at least one type");
        for (std::size_t k = 0; k < rates.size(); ++k) raw_[k] = inverse_softplus_nonneg(rates[k]);
        refresh();
    }

    [[nodiscard]] ModelFamily family() const override { return ModelFamily::kPoisson; }
    [[nodiscard]] std::size_t num_types() const override { return rates_.size(); }
    [[nodiscard]] std::unique_ptr<IntensityModel> clone() const override {
        return std::make_unique<PoissonModel>(*this);
    }
    [[nodiscard]] std::size_t num_parameters() const override { return raw_.size(); }
    [[nodiscard]] std::vector<double> parameters() const override { return raw_; }
    void set_parameters(std::span<const double> raw) override {
        if (raw.size() != raw_.size()) throw PreconditionError("Poisson parameter count mismatch");
        raw_.assign(raw.begin(), raw.end());
        refresh();
    }

    [[nodiscard]] const std::vector<double>& rates() const noexcept { return rates_; }

    [[nodiscard]] std::unique_ptr<IntensityCursor> cursor(const EventSequence&) const override {
        return std::make_unique<Cursor>(rates_);
    }

    [[nodiscard]] double integral(double ta, double tb, const EventSequence&) const override {
        return total_ * (tb - ta);
    }

    LogLikelihood log_likelihood(const EventSequence& seq, std::span<double> grad = {}) const override {
        const double span_len = seq.t_end() - seq.t_start();
        std::vector<std::size_t> counts = seq.type_counts(rates_.size());
        double ll = -total_ * span_len;
        for (std::size_t k = 0; k < rates_.size(); ++k) {
            if (counts[k] == 0) continue;
            if (rates_[k] <= 0.0) return {-std::numeric_limits<double>::infinity(), true};
            ll += static_cast<double>(counts[k]) * std::log(rates_[k]);
        }
        if (!grad.empty()) {
            for (std::size_t k = 0; k < rates_.size(); ++k) {
                const double d_rate = static_cast<double>(counts[k]) / rates_[k] - span_len;
                grad[k] += d_rate * sigmoid(raw_[k]);
            }
        }
        return {ll, false};
    }

private:
    class Cursor final : public IntensityCursor {
    public:
        explicit Cursor(const std::vector<double>& rates) : rates_(rates) {}
        void intensities(double, std::span<double> out) const override {
            std::copy(rates_.begin(), rates_.end(), out.begin());
        }
        [[nodiscard]] double bound(double) const override {
            return std::accumulate(rates_.begin(), rates_.end(), 0.0);
        }
        void push(const Event&) override {}

    private:
        const std::vector<double>& rates_;
    };

    void refresh() {
        rates_.resize(raw_.size());
        for (std::size_t k = 0; k < raw_.size(); ++k) rates_[k] = softplus(raw_[k]);
        total_ = std::accumulate(rates_.begin(), rates_.end(), 0.0);
    }

    std::vector<double> raw_;
    std::vector<double> rates_;
    double total_{0.0};
};

// ---------------------------------------------------------------------------

/// Multivariate Hawkes process with exponential kernels:
///   lambda_k(t) = mu[k] + sum_{t_j < t} alpha[k_j][k] * exp(-decay[k_j][k] * (t - t_j)).
/// Parameter layout: mu (K), alpha (K*K, row = source type), decay (K*K).
class HawkesExpModel final : public IntensityModel {
public:
    HawkesExpModel(std::vector<double> mu, std::vector<double> alpha, std::vector<double> decay)
        : k_(mu.size()) {
        if (k_ == 0) throw PreconditionError("Hawkes model needs at least one type");
        if (alpha.size() != k_ * k_ || decay.size() != k_ * k_) {
            throw PreconditionError("Hawkes alpha/decay must be K*K");
        }
        raw_.resize(num_parameters());
        for (std::size_t k = 0; k < k_; ++k) raw_[k] = inverse_softplus_nonneg(mu[k]);
        for (std::size_t i = 0; i < k_ * k_; ++i) {
            raw_[k_ + i] = inverse_softplus_nonneg(alpha[i]);
            raw_[k_ + k_ * k_ + i] = inverse_softplus(decay[i]);
        }
        refresh();
    }

    /// Scalar (K = 1) convenience constructor.
    HawkesExpModel(double mu, double alpha, double decay)
        : HawkesExpModel(std::vector<double>{mu}, std::vector<double>{alpha}, std::vector<double>{decay}) {}

    [[nodiscard]] ModelFamily family() const override { return ModelFamily::kHawkesExp; }
    [[nodiscard]] std::size_t num_types() const override { return k_; }
    [[nodiscard]] std::unique_ptr<IntensityModel> clone() const override {
        return std::make_unique<HawkesExpModel>(*this);
    }
    [[nodiscard]] std::size_t num_parameters() const override { return k_ + 2 * k_ * k_; }
    [[nodiscard]] std::vector<double> parameters() const override { return raw_; }
    void set_parameters(std::span<const double> raw) override {
        if (raw.size() != raw_.size()) throw PreconditionError("Hawkes parameter count mismatch");
        raw_.assign(raw.begin(), raw.end());
        refresh();
    }

    [[nodiscard]] const std::vector<double>& mu() const noexcept { return mu_; }
    [[nodiscard]] const std::vector<double>& alpha() const noexcept { return alpha_; }
    [[nodiscard]] const std::vector<double>& decay() const noexcept { return decay_; }
    [[nodiscard]] double alpha(std::size_t src, std::size_t dst) const { return alpha_[src * k_ + dst]; }
    [[nodiscard]] double decay(std::size_t src, std::size_t dst) const { return decay_[src * k_ + dst]; }

    [[nodiscard]] std::unique_ptr<IntensityCursor> cursor(const EventSequence& history) const override {
        auto c = std::make_unique<Cursor>(*this);
        for (const auto& e : history) c->push(e);
        return c;
    }

    [[nodiscard]] double integral(double ta, double tb, const EventSequence& history) const override {
        double total = 0.0;
        for (double m : mu_) total += m * (tb - ta);
        for (const auto& e : history) {
            for (std::size_t dst = 0; dst < k_; ++dst) {
                const std::size_t i = e.type * k_ + dst;
                total += alpha_[i] / decay_[i] *
                         (std::exp(-decay_[i] * (ta - e.time)) - std::exp(-decay_[i] * (tb - e.time)));
            }
        }
        return total;
    }

    LogLikelihood log_likelihood(const EventSequence& seq, std::span<double> grad = {}) const override {
        const std::size_t kk = k_ * k_;
        const bool want_grad = !grad.empty();
        // For each (src, dst): r = sum_j exp(-b * dt_j), s = sum_j dt_j * exp(-b * dt_j)
        // over earlier events j of type src, maintained recursively.
        std::vector<double> r(kk, 0.0);
        std::vector<double> s(kk, 0.0);
        std::vector<double> g_mu(want_grad ? k_ : 0, 0.0);
        std::vector<double> g_alpha(want_grad ? kk : 0, 0.0);
        std::vector<double> g_decay(want_grad ? kk : 0, 0.0);

        double ll = 0.0;
        double prev = seq.t_start();
        bool any_prev = false;
        for (const auto& e : seq) {
            if (any_prev) {
                const double dt = e.time - prev;
                for (std::size_t i = 0; i < kk; ++i) {
                    const double f = std::exp(-decay_[i] * dt);
                    s[i] = (s[i] + dt * r[i]) * f;
                    r[i] *= f;
                }
            }
            const std::size_t dst = e.type;
            double lam = mu_[dst];
            for (std::size_t src = 0; src < k_; ++src) lam += alpha_[src * k_ + dst] * r[src * k_ + dst];
            if (!(lam > 0.0)) return {-std::numeric_limits<double>::infinity(), true};
            ll += std::log(lam);
            if (want_grad) {
                const double inv = 1.0 / lam;
                g_mu[dst] += inv;
                for (std::size_t src = 0; src < k_; ++src) {
                    const std::size_t i = src * k_ + dst;
                    g_alpha[i] += r[i] * inv;
                    g_decay[i] -= alpha_[i] * s[i] * inv;
                }
            }
            for (std::size_t d = 0; d < k_; ++d) r[e.type * k_ + d] += 1.0;
            prev = e.time;
            any_prev = true;
        }

        // Compensator over [t_start, t_end].
        const double span_len = seq.t_end() - seq.t_start();
        for (std::size_t k = 0; k < k_; ++k) {
            ll -= mu_[k] * span_len;
            if (want_grad) g_mu[k] -= span_len;
        }
        for (const auto& e : seq) {
            const double tail = seq.t_end() - e.time;
            for (std::size_t dst = 0; dst < k_; ++dst) {
                const std::size_t i = e.type * k_ + dst;
                const double b = decay_[i];
                const double f = std::exp(-b * tail);
                const double one_minus = -std::expm1(-b * tail);
                ll -= alpha_[i] / b * one_minus;
                if (want_grad) {
                    g_alpha[i] -= one_minus / b;
                    g_decay[i] -= alpha_[i] * (tail * f / b - one_minus / (b * b));
                }
            }
        }

        if (want_grad) {
            for (std::size_t k = 0; k < k_; ++k) grad[k] += g_mu[k] * sigmoid(raw_[k]);
            for (std::size_t i = 0; i < kk; ++i) {
                grad[k_ + i] += g_alpha[i] * sigmoid(raw_[k_ + i]);
                grad[k_ + kk + i] += g_decay[i] * sigmoid(raw_[k_ + kk + i]);
            }
        }
        return {ll, false};
    }

private:
    class Cursor final : public IntensityCursor {
    public:
        explicit Cursor(const HawkesExpModel& m) : m_(m), excitation_(m.k_ * m.k_, 0.0) {}

        void intensities(double t, std::span<double> out) const override {
            const std::size_t k = m_.k_;
            const double dt = has_ref_ ? t - t_ref_ : 0.0;
            for (std::size_t dst = 0; dst < k; ++dst) {
                double lam = m_.mu_[dst];
                for (std::size_t src = 0; src < k; ++src) {
                    const std::size_t i = src * k + dst;
                    if (excitation_[i] != 0.0) lam += excitation_[i] * std::exp(-m_.decay_[i] * dt);
                }
                out[dst] = lam;
            }
        }

        // Total intensity is non-increasing between events, so its value at t0 bounds it.
        [[nodiscard]] double bound(double t0) const override {
            std::vector<double> lam(m_.k_);
            intensities(t0, lam);
            return std::accumulate(lam.begin(), lam.end(), 0.0);
        }

        void push(const Event& e) override {
            const std::size_t k = m_.k_;
            if (has_ref_) {
                const double dt = e.time - t_ref_;
                for (std::size_t i = 0; i < k * k; ++i) {
                    if (excitation_[i] != 0.0) excitation_[i] *= std::exp(-m_.decay_[i] * dt);
                }
            }
            for (std::size_t dst = 0; dst < k; ++dst) excitation_[e.type * k + dst] += m_.alpha_[e.type * k + dst];
            t_ref_ = e.time;
            has_ref_ = true;
        }

    private:
        const HawkesExpModel& m_;
        std::vector<double> excitation_;
        double t_ref_{0.0};
        bool has_ref_{false};
    };

    void refresh() {
        const std::size_t kk = k_ * k_;
        mu_.resize(k_);
        alpha_.resize(kk);
        decay_.resize(kk);
        for (std::size_t k = 0; k < k_; ++k) mu_[k] = softplus(raw_[k]);
        for (std::size_t i = 0; i < kk; ++i) {
            alpha_[i] = softplus(raw_[k_ + i]);
            decay_[i] = softplus(raw_[k_ + kk + i]);
        }
    }

    std::size_t k_;
    std::vector<double> raw_;
    std::vector<double> mu_;
    std::vector<double> alpha_;
    std::vector<double> decay_;
};

[[nodiscard]] inline std::unique_ptr<IntensityModel> make_model(ModelFamily family, std::size_t num_types,
                                                                std::span<const double> raw) {
    std::unique_ptr<IntensityModel> m;
    switch (family) {
        case ModelFamily::kPoisson: m = std::make_unique<PoissonModel>(std::vector<double>(num_types, 1.0)); break;
        case ModelFamily::kHawkesExp:
            m = std::make_unique<HawkesExpModel>(std::vector<double>(num_types, 1.0),
                                                 std::vector<double>(num_types * num_types, 1.0),
                                                 std::vector<double>(num_types * num_types, 1.0));
            break;
    }
    if (raw.size() != m->num_parameters()) {
        throw FormatError("expected " + std::to_string(m->num_parameters()) + " parameters for " +
                          std::string(family_name(family)) + " with K=" + std::to_string(num_types) + ", got " +
                          std::to_string(raw.size()));
    }
    m->set_parameters(raw);
    return m;
}

} // namespace hypro
