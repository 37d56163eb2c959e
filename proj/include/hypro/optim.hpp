#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace hypro {

struct OptimizerConfig {
    double learning_rate{1e-2};
    double beta1{0.9};
    double beta2{0.999};
    double epsilon{1e-8};
    std::size_t batch_size{32};
    std::size_t max_epochs{100};
    std::size_t patience{10};
    // Multiplied into the learning rate after every epoch.
    double lr_decay{1.0};
};

class Adam {
public:
    Adam(std::size_t dim, const OptimizerConfig& cfg)
        : cfg_(cfg), lr_(cfg.learning_rate), m_(dim, 0.0), v_(dim, 0.0) {}

    /// Descends along `grad` (of a quantity to minimize).
    void step(std::span<double> params, std::span<const double> grad) {
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
            params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.epsilon);
        }
    }

    void end_epoch() noexcept { lr_ *= cfg_.lr_decay; }
    [[nodiscard]] double learning_rate() const noexcept { return lr_; }

private:
    OptimizerConfig cfg_;
    double lr_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::size_t t_{0};
};

} // namespace hypro
