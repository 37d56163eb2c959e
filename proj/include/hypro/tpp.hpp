#pragma once

#include "hypro/core.hpp"
#include "hypro/error.hpp"
#include "hypro/intensity.hpp"
#include "hypro/optim.hpp"
#include "hypro/parallel.hpp"
#include "hypro/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <vector>

namespace hypro {

struct MleEpochRecord {
    std::size_t epoch{0};
    double train_loglik{0.0};  // mean per sequence
    double dev_loglik{0.0};    // mean per sequence
    double learning_rate{0.0};
};

struct MleResult {
    std::unique_ptr<IntensityModel> model;
    std::vector<MleEpochRecord> log;
    std::size_t best_epoch{0};
    double best_dev_loglik{0.0};
};

/// Data-driven starting point: base rates at half the empirical per-type rate,
/// weak excitation, unit decay.
[[nodiscard]] inline std::unique_ptr<IntensityModel> initial_model(ModelFamily family, const Dataset& data) {
    const std::size_t k = data.num_types;
    std::vector<double> counts(k, 0.0);
    double total_time = 0.0;
    for (const auto& s : data.sequences) {
        total_time += s.t_end() - s.t_start();
        for (const auto& e : s) counts[e.type] += 1.0;
    }
    std::vector<double> rate(k);
    for (std::size_t i = 0; i < k; ++i) {
        rate[i] = std::max(total_time > 0.0 ? counts[i] / total_time : 0.0, 1e-3);
    }
    switch (family) {
        case ModelFamily::kPoisson: {
            std::vector<double> r(k, 1.0);
            return std::make_unique<PoissonModel>(r);
        }
        case ModelFamily::kHawkesExp: {
            for (auto& r : rate) r *= 0.5;
            return std::make_unique<HawkesExpModel>(rate, std::vector<double>(k * k, 0.1),
                                                    std::vector<double>(k * k, 1.0));
        }
    }
    throw ConfigError("unknown model family");
}

/// Mean log-likelihood per sequence.
[[nodiscard]] inline double mean_loglik(const IntensityModel& model, const Dataset& data) {
    std::vector<double> per(data.size());
    parallel_for(data.size(), [&](std::size_t i) { per[i] = model.log_likelihood(data.sequences[i]).value; });
    double total = 0.0;
    for (double v : per) total += v;
    return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

/// Maximum-likelihood fit by minibatch Adam on the unconstrained parameters, with
/// early stopping on dev log-likelihood. Without a dev set the training set is used.
/// The returned model holds the best-dev parameters.
[[nodiscard]] inline MleResult fit_mle(ModelFamily family, const Dataset& train, const Dataset* dev,
                                       const OptimizerConfig& opt, RngStream rng,
                                       const std::function<void(const MleEpochRecord&)>& on_epoch = {}) {
    if (train.empty()) throw PreconditionError("fit_mle needs a non-empty dataset");
    train.validate();
    const Dataset& held_out = (dev != nullptr && !dev->empty()) ? *dev : train;

    MleResult result;
    auto model = initial_model(family, train);
    const std::size_t dim = model->num_parameters();
    std::vector<double> params = model->parameters();
    Adam adam(dim, opt);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = std::max<std::size_t>(1, opt.batch_size);

    std::vector<double> best = params;
    double best_dev = mean_loglik(*model, held_out);
    std::size_t since_best = 0;
    result.best_epoch = 0;

    std::vector<std::vector<double>> seq_grad;
    std::vector<double> seq_ll;
    for (std::size_t epoch = 1; epoch <= opt.max_epochs; ++epoch) {
        // Fisher-Yates with the base-fit stream.
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

        double train_total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            const std::size_t n = stop - start;
            seq_grad.assign(n, std::vector<double>(dim, 0.0));
            seq_ll.assign(n, 0.0);
            parallel_for(n, [&](std::size_t j) {
                seq_ll[j] = model->log_likelihood(train.sequences[order[start + j]], seq_grad[j]).value;
            });
            std::vector<double> grad(dim, 0.0);
            double events = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t sid = order[start + j];
                if (!std::isfinite(seq_ll[j])) {
                    std::ostringstream os;
                    os << "non-finite log-likelihood on sequence " << train.id(sid) << "; parameters:";
                    for (double p : params) os << ' ' << p;
                    throw NumericalError(os.str());
                }
                train_total += seq_ll[j];
                events += static_cast<double>(train.sequences[sid].size());
                for (std::size_t d = 0; d < dim; ++d) grad[d] += seq_grad[j][d];
            }
            // Minimize the negative log-likelihood per event.
            events = std::max(events, 1.0);
            for (std::size_t d = 0; d < dim; ++d) {
                grad[d] = -grad[d] / events;
                if (!std::isfinite(grad[d])) {
                    std::ostringstream os;
                    os << "non-finite gradient in batch starting at sequence " << train.id(order[start])
                       << "; parameters:";
                    for (double p : params) os << ' ' << p;
                    throw NumericalError(os.str());
                }
            }
            adam.step(params, grad);
            model->set_parameters(params);
        }

        MleEpochRecord rec;
        rec.epoch = epoch;
        rec.train_loglik = train_total / static_cast<double>(train.size());
        rec.dev_loglik = mean_loglik(*model, held_out);
        rec.learning_rate = adam.learning_rate();
        result.log.push_back(rec);
        if (on_epoch) on_epoch(rec);
        adam.end_epoch();

        if (rec.dev_loglik > best_dev) {
            best_dev = rec.dev_loglik;
            best = params;
            since_best = 0;
            result.best_epoch = epoch;
        } else if (++since_best >= opt.patience) {
            break;
        }
    }
    model->set_parameters(best);
    result.model = std::move(model);
    result.best_dev_loglik = best_dev;
    return result;
}

} // namespace hypro
