#pragma once

#include "hypro/core.hpp"
#include "hypro/error.hpp"
#include "hypro/intensity.hpp"
#include "hypro/parallel.hpp"
#include "hypro/rng.hpp"

#include <cstddef>
#include <numeric>
#include <sstream>
#include <vector>

namespace hypro {

// Proposals allowed per sampled sequence before the sampler assumes a broken bound.
inline constexpr std::size_t kMaxThinningProposals = 10'000'000;

/// Draws a continuation over (prefix.t_end, T_prime] by thinning. The bound is
/// recomputed at the current time after every proposal, accepted or not; the
/// history grows with each accepted event.
[[nodiscard]] inline EventSequence thinning_sample(const IntensityModel& model, const EventSequence& prefix,
                                                   double T_prime, RngStream& rng) {
    const double start = prefix.t_end();
    if (T_prime < start) {
        std::ostringstream os;
        os << "T_prime=" << T_prime << " precedes prefix end " << start;
        throw RangeError(os.str());
    }
    const std::size_t k = model.num_types();
    auto cursor = model.cursor(prefix);
    std::vector<double> lam(k);
    std::vector<Event> out;

    double t0 = start;
    std::size_t proposals = 0;
    while (t0 < T_prime) {
        const double bound = cursor->bound(t0);
        if (!(bound > 0.0)) break;  // intensity is zero from here on
        if (!std::isfinite(bound)) throw NumericalError("thinning bound is not finite");
        t0 += rng.exponential(bound);
        const double u = rng.uniform();
        if (t0 > T_prime) break;
        if (++proposals > kMaxThinningProposals) {
            std::ostringstream os;
            os << "thinning exceeded " << kMaxThinningProposals << " proposals (t0=" << t0 << ", bound=" << bound
               << ", accepted=" << out.size() << ")";
            throw NumericalError(os.str());
        }
        cursor->intensities(t0, lam);
        const double total = std::accumulate(lam.begin(), lam.end(), 0.0);
        if (total > bound * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "intensity " << total << " exceeds thinning bound " << bound << " at t=" << t0;
            throw NumericalError(os.str());
        }
        if (u * bound > total) continue;

        // Type proportional to lambda_k(t0).
        double pick = rng.uniform() * total;
        std::size_t type = 0;
        for (; type + 1 < k; ++type) {
            if (pick < lam[type]) break;
            pick -= lam[type];
        }
        while (lam[type] <= 0.0 && type > 0) --type;
        const Event e{t0, type};
        out.push_back(e);
        cursor->push(e);
    }
    return EventSequence(std::move(out), start, T_prime);
}

/// N independent continuations of one prefix; draw n uses substream n of `rng`,
/// so the list is identical whether draws run sequentially or in parallel.
[[nodiscard]] inline std::vector<EventSequence> draw_noise(const IntensityModel& model, const EventSequence& prefix,
                                                           double T_prime, std::size_t n, const RngStream& rng) {
    if (n == 0) throw PreconditionError("draw_noise needs N >= 1");
    std::vector<EventSequence> out(n);
    parallel_for(n, [&](std::size_t i) {
        RngStream sub = rng.substream(i);
        out[i] = thinning_sample(model, prefix, T_prime, sub);
    });
    return out;
}

} // namespace hypro
