#include "hypro/synth.hpp"
#include "hypro/tpp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace hypro;

namespace {

SynthSpec budgeted_spec(std::size_t budget, std::size_t num_seqs, std::uint64_t seed) {
    SynthSpec s;
    s.generator = Generator::kHawkesBudgeted;
    s.mu = {1.8, 0.4, 0.4};
    s.alpha = {0.0, 0.0, 0.0, 0.0, 0.2, 0.1, 0.0, 0.1, 0.2};
    s.decay = std::vector<double>(9, 1.0);
    s.budgets = {{0, budget}};
    s.num_seqs = num_seqs;
    s.horizon = 20.0;
    s.seed = seed;
    return s;
}

} // namespace

TEST(Generate, PoissonMeanCount) {
    SynthSpec spec;
    spec.generator = Generator::kPoisson;
    spec.rates = {2.0};
    spec.num_seqs = 1000;
    spec.horizon = 10.0;
    spec.seed = 1;
    const Dataset d = generate(spec);
    ASSERT_EQ(d.size(), 1000u);
    double total = 0.0;
    for (const auto& s : d.sequences) {
        total += static_cast<double>(s.size());
        EXPECT_EQ(s.t_start(), 0.0);
        EXPECT_EQ(s.t_end(), 10.0);
    }
    const double se = std::sqrt(20.0 / 1000.0);
    EXPECT_NEAR(total / 1000.0, 20.0, 3.0 * se);
}

TEST(Generate, ZeroBudgetRemovesTypeZero) {
    SynthSpec spec = budgeted_spec(0, 200, 2);
    spec.mu = {0.02, 0.4, 0.4};  // rejection stays feasible
    const Dataset d = generate(spec);
    for (const auto& s : d.sequences) EXPECT_EQ(s.type_counts(3)[0], 0u);
}

TEST(Generate, BudgetHoldsOnEverySequence) {
    const Dataset d = generate(budgeted_spec(24, 300, 3));
    std::size_t at_cap = 0;
    for (const auto& s : d.sequences) {
        const std::size_t n0 = s.type_counts(3)[0];
        EXPECT_LE(n0, 24u);
        at_cap += n0 >= 20 ? 1 : 0;
    }
    EXPECT_GT(at_cap, 0u);  // the cap binds, it is not vacuous
}

TEST(Generate, SameSeedSameDataset) {
    const Dataset a = generate(budgeted_spec(24, 50, 4));
    const Dataset b = generate(budgeted_spec(24, 50, 4));
    EXPECT_EQ(a.sequences, b.sequences);
    EXPECT_EQ(a.ids, b.ids);
    const Dataset c = generate(budgeted_spec(24, 50, 5));
    EXPECT_NE(a.sequences, c.sequences);
}

TEST(Generate, TooTightBudgetIsConfigError) {
    SynthSpec spec = budgeted_spec(0, 5, 6);
    spec.mu = {5.0, 0.4, 0.4};  // P(no type-0 event in 20 time units) = e^-100
    EXPECT_THROW((void)generate(spec), ConfigError);
}

TEST(Generate, InvalidSpecsAreConfigErrors) {
    SynthSpec spec = budgeted_spec(3, 5, 7);
    spec.budgets.clear();
    EXPECT_THROW((void)generate(spec), ConfigError);
    spec = budgeted_spec(3, 5, 7);
    spec.budgets = {{3, 1}};
    EXPECT_THROW((void)generate(spec), ConfigError);
    spec = budgeted_spec(3, 5, 7);
    spec.alpha.pop_back();
    EXPECT_THROW((void)generate(spec), ConfigError);
    EXPECT_EQ(parse_generator("hawkes_budgeted"), Generator::kHawkesBudgeted);
    EXPECT_THROW((void)parse_generator("gaussian"), ConfigError);
}

TEST(Generate, RefitModelBreaksTheBudgetTheDataRespects) {
    const SynthSpec spec = budgeted_spec(24, 400, 8);
    const Dataset d = generate(spec);
    OptimizerConfig opt;
    opt.learning_rate = 0.02;
    opt.max_epochs = 40;
    opt.patience = 5;
    const auto fit = fit_mle(ModelFamily::kHawkesExp, d, nullptr, opt, RngStream(9));

    const EventSequence empty({}, 0.0, 0.0);
    const RngStream root(10);
    constexpr std::size_t kRollouts = 2000;
    std::size_t broken = 0;
    for (std::size_t i = 0; i < kRollouts; ++i) {
        RngStream r = root.substream(i);
        const auto s = thinning_sample(*fit.model, empty, spec.horizon, r);
        broken += within_budgets(s, spec.budgets, 3) ? 0 : 1;
    }
    std::size_t data_broken = 0;
    for (const auto& s : d.sequences) data_broken += within_budgets(s, spec.budgets, 3) ? 0 : 1;
    EXPECT_EQ(data_broken, 0u);
    EXPECT_GE(static_cast<double>(broken) / kRollouts, 0.20);
}
