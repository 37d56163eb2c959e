#pragma once

#include "hypro/core.hpp"
#include "hypro/error.hpp"
#include "hypro/rng.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace hypro {

/// sqrt(mean_k (C_k - C'_k)^2) over per-type token counts.
[[nodiscard]] inline double count_rmse(const EventSequence& truth, const EventSequence& pred, std::size_t num_types) {
    if (num_types == 0) throw PreconditionError("count_rmse needs K >= 1");
    const auto a = truth.type_counts(num_types);
    const auto b = pred.type_counts(num_types);
    double sq = 0.0;
    for (std::size_t k = 0; k < num_types; ++k) {
        const double d = static_cast<double>(a[k]) - static_cast<double>(b[k]);
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(num_types));
}

/// Optimal transport distance between event sequences: the cheapest monotone
/// alignment where same-type events match at cost |dt| and any unmatched event
/// costs c_del. A type change therefore costs 2 * c_del.
[[nodiscard]] inline double otd(const EventSequence& a, const EventSequence& b, double c_del) {
    if (!(c_del > 0.0)) throw PreconditionError("otd needs c_del > 0");
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    std::vector<double> prev(m + 1);
    std::vector<double> cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j == 0 ? 0.0 : prev[j - 1] + c_del;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = prev[0] + c_del;
        for (std::size_t j = 1; j <= m; ++j) {
            double best = std::min(prev[j] + c_del, cur[j - 1] + c_del);
            if (a[i - 1].type == b[j - 1].type) best = std::min(best, prev[j - 1] + std::abs(a[i - 1].time - b[j - 1].time));
            cur[j] = best;
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

struct OtdConfig {
    double c_del{1.0};
    std::vector<double> c_del_grid{0.05, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0};

    void validate() const {
        if (!(c_del > 0.0)) throw ConfigError("otd c_del must be > 0");
        if (c_del_grid.empty()) throw ConfigError("otd c_del grid is empty");
        for (double c : c_del_grid) {
            if (!(c > 0.0)) throw ConfigError("otd c_del grid entries must be > 0");
        }
    }
};

struct OtdSweep {
    std::vector<std::pair<double, double>> by_cdel;  // (c_del, distance) in grid order
    double mean{0.0};
};

[[nodiscard]] inline OtdSweep otd_sweep(const EventSequence& truth, const EventSequence& pred, const OtdConfig& cfg) {
    cfg.validate();
    OtdSweep out;
    for (double c : cfg.c_del_grid) {
        const double d = otd(truth, pred, c);
        out.by_cdel.emplace_back(c, d);
        out.mean += d;
    }
    out.mean /= static_cast<double>(cfg.c_del_grid.size());
    return out;
}

// ---------------------------------------------------------------------------
// Corpus-level report.

struct EvalReport {
    std::size_t num_sequences{0};
    double rmse{0.0};                                   // mean per-sequence count RMSE
    std::vector<std::pair<double, double>> otd_by_cdel; // mean OTD per grid value
    double otd_mean{0.0};                               // mean over the grid
    std::vector<std::vector<std::size_t>> truth_counts; // [sequence][type]
    std::vector<std::vector<std::size_t>> pred_counts;
};

[[nodiscard]] inline EvalReport evaluate_pairs(const std::vector<std::pair<EventSequence, EventSequence>>& pairs,
                                               std::size_t num_types, const OtdConfig& cfg) {
    cfg.validate();
    EvalReport r;
    r.num_sequences = pairs.size();
    for (double c : cfg.c_del_grid) r.otd_by_cdel.emplace_back(c, 0.0);
    for (const auto& [truth, pred] : pairs) {
        r.rmse += count_rmse(truth, pred, num_types);
        const OtdSweep s = otd_sweep(truth, pred, cfg);
        for (std::size_t g = 0; g < s.by_cdel.size(); ++g) r.otd_by_cdel[g].second += s.by_cdel[g].second;
        r.truth_counts.push_back(truth.type_counts(num_types));
        r.pred_counts.push_back(pred.type_counts(num_types));
    }
    if (!pairs.empty()) {
        const auto n = static_cast<double>(pairs.size());
        r.rmse /= n;
        for (auto& [c, d] : r.otd_by_cdel) d /= n;
    }
    for (const auto& [c, d] : r.otd_by_cdel) r.otd_mean += d;
    r.otd_mean /= static_cast<double>(r.otd_by_cdel.size());
    return r;
}

// ---------------------------------------------------------------------------
// Cascading-error diagnostics. Predicted token i is compared with true token i.

struct CascadeGroup {
    std::size_t first_error_token{0};  // 1-based position of the first type error
    std::size_t sequences{0};
    std::size_t subsequent_tokens{0};
    std::size_t subsequent_errors{0};
    [[nodiscard]] double error_rate() const noexcept {
        return subsequent_tokens == 0 ? 0.0
                                      : static_cast<double>(subsequent_errors) / static_cast<double>(subsequent_tokens);
    }
};

struct LinearFit {
    std::size_t points{0};
    double slope{0.0};
    double intercept{0.0};
    double slope_stderr{0.0};
    double slope_p_value{1.0};  // two-sided t-test, H0: slope = 0
    bool degenerate{false};     // x has no spread; slope undefined
};

struct CascadeReport {
    std::vector<CascadeGroup> groups;  // ascending first_error_token
    std::size_t error_free_sequences{0};
    LinearFit time_regression;         // x = |dt| on token 1, y = mean |dt| on later tokens
};

/// Ordinary least squares y = a x + b with a t-test on the slope.
[[nodiscard]] inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw PreconditionError("fit_line: x and y differ in length");
    if (x.size() < 3) {
        throw InsufficientDataError("regression needs at least 3 points, got " + std::to_string(x.size()));
    }
    LinearFit f;
    f.points = x.size();
    const auto n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) {
        f.degenerate = true;
        f.intercept = my;
        return f;
    }
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.slope * x[i] + f.intercept);
        sse += r * r;
    }
    const double dof = n - 2.0;
    f.slope_stderr = std::sqrt(sse / dof / sxx);
    if (f.slope_stderr == 0.0) {
        f.slope_p_value = f.slope == 0.0 ? 1.0 : 0.0;
    } else {
        const boost::math::students_t dist(dof);
        const double t = std::abs(f.slope / f.slope_stderr);
        f.slope_p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, t));
    }
    return f;
}

[[nodiscard]] inline CascadeReport cascading_analysis(
    const std::vector<std::pair<EventSequence, EventSequence>>& pairs) {
    if (pairs.size() < 3) {
        throw InsufficientDataError("cascading analysis needs at least 3 (truth, prediction) pairs, got " +
                                    std::to_string(pairs.size()));
    }
    CascadeReport r;
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& [truth, pred] : pairs) {
        const std::size_t len = std::min(truth.size(), pred.size());
        std::size_t first = len;
        for (std::size_t i = 0; i < len; ++i) {
            if (truth[i].type != pred[i].type) {
                first = i;
                break;
            }
        }
        if (first == len) {
            ++r.error_free_sequences;
        } else {
            auto it = std::find_if(r.groups.begin(), r.groups.end(),
                                   [&](const CascadeGroup& g) { return g.first_error_token == first + 1; });
            if (it == r.groups.end()) {
                r.groups.push_back(CascadeGroup{first + 1, 0, 0, 0});
                it = r.groups.end() - 1;
            }
            ++it->sequences;
            for (std::size_t i = first + 1; i < len; ++i) {
                ++it->subsequent_tokens;
                if (truth[i].type != pred[i].type) ++it->subsequent_errors;
            }
        }
        if (len >= 2) {
            xs.push_back(std::abs(truth[0].time - pred[0].time));
            double y = 0.0;
            for (std::size_t i = 1; i < len; ++i) y += std::abs(truth[i].time - pred[i].time);
            ys.push_back(y / static_cast<double>(len - 1));
        }
    }
    std::sort(r.groups.begin(), r.groups.end(),
              [](const CascadeGroup& a, const CascadeGroup& b) { return a.first_error_token < b.first_error_token; });
    r.time_regression = fit_line(xs, ys);
    return r;
}

// ---------------------------------------------------------------------------

struct HistogramRow {
    std::string label;
    double bin_lo{0.0};
    double bin_hi{0.0};
    std::size_t count{0};
};

/// Equal-width histogram over [min, max]; constant input collapses into one bin.
[[nodiscard]] inline std::vector<HistogramRow> energy_histogram_export(const std::string& label,
                                                                       const std::vector<double>& energies,
                                                                       std::size_t bins) {
    if (energies.empty()) throw PreconditionError("energy histogram needs at least one value");
    if (bins == 0) throw PreconditionError("energy histogram needs at least one bin");
    const auto [lo_it, hi_it] = std::minmax_element(energies.begin(), energies.end());
    double lo = *lo_it;
    double hi = *hi_it;
    if (hi == lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<HistogramRow> rows(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        rows[b].label = label;
        rows[b].bin_lo = lo + width * static_cast<double>(b);
        rows[b].bin_hi = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
    }
    for (double e : energies) {
        auto b = static_cast<std::size_t>((e - lo) / width);
        ++rows[std::min(b, bins - 1)].count;
    }
    return rows;
}

[[nodiscard]] inline std::string histogram_csv(const std::vector<HistogramRow>& rows) {
    std::ostringstream os;
    os.precision(17);
    os << "label,bin_lo,bin_hi,count\n";
    for (const auto& r : rows) os << r.label << ',' << r.bin_lo << ',' << r.bin_hi << ',' << r.count << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------

struct PermutationTest {
    double mean_difference{0.0};  // mean(a - b)
    double p_value{1.0};          // two-sided
    std::size_t permutations{0};
    bool exact{false};
};

/// Paired permutation test on per-fold scores: under H0 each pair's sign is
/// exchangeable. Exact enumeration up to 20 pairs, Monte Carlo beyond.
[[nodiscard]] inline PermutationTest paired_permutation_test(const std::vector<double>& a, const std::vector<double>& b,
                                                             RngStream rng, std::size_t samples = 100000) {
    if (a.size() != b.size() || a.empty()) throw PreconditionError("paired test needs equal, non-empty samples");
    const std::size_t n = a.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    double observed = 0.0;
    for (double v : d) observed += v;
    PermutationTest out;
    out.mean_difference = observed / static_cast<double>(n);
    const double threshold = std::abs(observed) * (1.0 - 1e-12);

    std::size_t extreme = 0;
    if (n <= 20) {
        out.exact = true;
        out.permutations = std::size_t{1} << n;
        for (std::size_t mask = 0; mask < out.permutations; ++mask) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += ((mask >> i) & 1U) ? -d[i] : d[i];
            if (std::abs(s) >= threshold) ++extreme;
        }
    } else {
        out.permutations = samples;
        for (std::size_t r = 0; r < samples; ++r) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += (rng.next_u64() & 1U) ? -d[i] : d[i];
            if (std::abs(s) >= threshold) ++extreme;
        }
    }
    // Monte Carlo counts the observed labelling itself, so p is never exactly zero.
    out.p_value = out.exact ? static_cast<double>(extreme) / static_cast<double>(out.permutations)
                            : static_cast<double>(extreme + 1) / static_cast<double>(out.permutations + 1);
    return out;
}

} // namespace hypro
