#include "hypro/nce.hpp"
#include "hypro/synth.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace hypro;

namespace {

std::vector<double> random_energies(RngStream& rng, std::size_t n, double spread) {
    std::vector<double> e(n);
    for (double& v : e) v = spread * (2.0 * rng.uniform() - 1.0);
    return e;
}

std::vector<double> loss_fd(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& e) {
    return oracle::finite_difference(f, e);
}

// Sequences on [0, 20] holding only type-1 events, split at T = 10. A two-type
// Poisson base puts about ten type-0 events in every noise continuation.
std::vector<HorizonSplit> type1_only_splits(std::size_t n, std::uint64_t seed) {
    SynthSpec spec;
    spec.generator = Generator::kPoisson;
    spec.rates = {1.0};
    spec.num_seqs = n;
    spec.horizon = 20.0;
    spec.seed = seed;
    const Dataset d = generate(spec);
    std::vector<HorizonSplit> out;
    for (const auto& s : d.sequences) {
        std::vector<Event> ev;
        for (const auto& e : s) ev.push_back({e.time, 1});
        out.push_back(split_at_horizon(EventSequence(ev, 0.0, 20.0), 10.0, 20.0));
    }
    return out;
}

} // namespace

TEST(BinaryNce, Examples) {
    const std::vector<double> zeros(6, 0.0);
    EXPECT_NEAR(binary_nce_loss(zeros).loss, 6.0 * std::log(2.0), 1e-12);
    EXPECT_NEAR(binary_nce_loss(zeros).loss, 4.15888, 1e-5);

    const std::vector<double> separated{-60.0, 60.0, 60.0};
    EXPECT_LT(binary_nce_loss(separated).loss, 1e-20);

    const auto g = binary_nce_loss(std::vector<double>{0.0, 0.0});
    EXPECT_NEAR(g.partials[0], 0.5, 1e-15);
    EXPECT_NEAR(g.partials[1], -0.5, 1e-15);
}

TEST(BinaryNce, BoundedBelowByZero) {
    RngStream rng(1);
    for (int i = 0; i < 1000; ++i) EXPECT_GE(binary_nce_loss(random_energies(rng, 6, 50.0)).loss, 0.0);
}

TEST(MultiNce, Examples) {
    EXPECT_NEAR(multi_nce_loss(std::vector<double>(6, 0.3)).loss, std::log(6.0), 1e-12);
    EXPECT_NEAR(multi_nce_loss(std::vector<double>(6, 0.0)).loss, 1.79176, 1e-5);

    std::vector<double> e{0.2, -1.0, 3.0, 0.7};
    std::vector<double> shifted = e;
    for (double& v : shifted) v += 1000.0;
    EXPECT_NEAR(multi_nce_loss(shifted).loss, multi_nce_loss(e).loss, 1e-9);

    const std::vector<double> sep{0.0, 10.0, 10.0, 10.0, 10.0, 10.0};
    EXPECT_NEAR(multi_nce_loss(sep).loss, std::log1p(5.0 * std::exp(-10.0)), 1e-15);
    EXPECT_NEAR(multi_nce_loss(sep).loss, 2.27e-4, 5e-7);
}

TEST(MultiNce, ShiftInvarianceAndBinaryContrast) {
    RngStream rng(3);
    int binary_differs = 0;
    constexpr int kTrials = 1000;
    for (int i = 0; i < kTrials; ++i) {
        const auto e = random_energies(rng, 6, 10.0);
        const double c = 200.0 * rng.uniform() - 100.0;
        std::vector<double> s = e;
        for (double& v : s) v += c;
        EXPECT_NEAR(multi_nce_loss(s).loss, multi_nce_loss(e).loss, 1e-9);
        if (binary_nce_loss(s).loss != binary_nce_loss(e).loss) ++binary_differs;
    }
    EXPECT_GE(binary_differs, 990);
}

TEST(MarginRegularizer, Examples) {
    EXPECT_EQ(distance_margin_reg(std::vector<double>{0.0, 2.0}, std::vector<double>{1.0}, 1.0).loss, 0.0);
    EXPECT_NEAR(distance_margin_reg(std::vector<double>{0.0, 0.5}, std::vector<double>{1.0}, 1.0).loss, 0.5, 1e-15);
    EXPECT_EQ(
        distance_margin_reg(std::vector<double>{1.0, 2.0, 6.0}, std::vector<double>{2.0, 4.0}, 0.5).loss, 0.0);
}

TEST(MarginRegularizer, ExactlyActiveMarginIsInactive) {
    const auto r = distance_margin_reg(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0}, 1.0);
    EXPECT_EQ(r.loss, 0.0);
    EXPECT_EQ(r.partials, (std::vector<double>{0.0, 0.0}));
}

TEST(MarginRegularizer, RejectsNegativeDistanceAndSizeMismatch) {
    EXPECT_THROW((void)distance_margin_reg(std::vector<double>{0.0, 1.0}, std::vector<double>{-0.1}, 1.0),
                 PreconditionError);
    EXPECT_THROW((void)distance_margin_reg(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 2.0}, 1.0),
                 PreconditionError);
}

TEST(LossPartials, MatchFiniteDifferences) {
    RngStream rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const auto e = random_energies(rng, 6, 5.0);
        const auto b = binary_nce_loss(e);
        EXPECT_LE(oracle::max_relative_error(
                      b.partials, loss_fd([](const std::vector<double>& x) { return binary_nce_loss(x).loss; }, e)),
                  1e-4);
        const auto m = multi_nce_loss(e);
        EXPECT_LE(oracle::max_relative_error(
                      m.partials, loss_fd([](const std::vector<double>& x) { return multi_nce_loss(x).loss; }, e)),
                  1e-4);
        std::vector<double> d(5);
        for (double& v : d) v = 3.0 * rng.uniform();
        const auto r = distance_margin_reg(e, d, 1.0);
        EXPECT_LE(oracle::max_relative_error(
                      r.partials,
                      loss_fd([&](const std::vector<double>& x) { return distance_margin_reg(x, d, 1.0).loss; }, e)),
                  1e-4);
    }
}

TEST(ContrastiveLoss, ParameterGradientMatchesFiniteDifferences) {
    FeatureConfig fc;
    fc.num_types = 2;
    fc.window_count = 2;
    fc.time_basis_count = 2;
    RngStream rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        EnergyFunction fn(fc, {5, 3}, rng);
        std::vector<double> theta(fn.num_parameters());
        for (double& t : theta) t = 2.0 * rng.uniform() - 1.0;
        fn.set_parameters(theta);
        ContrastiveFeatures feats;
        for (int r = 0; r < 6; ++r) {
            std::vector<double> row(feature_dimension(fc));
            for (double& v : row) v = rng.normal();
            feats.rows.push_back(row);
        }
        for (int r = 0; r < 5; ++r) feats.distances.push_back(2.0 * rng.uniform());
        TrainConfig cfg;
        cfg.objective = trial % 2 == 0 ? NceObjective::kMulti : NceObjective::kBinary;
        cfg.regularize = trial % 3 == 0;
        std::vector<double> grad(theta.size(), 0.0);
        (void)contrastive_loss(fn, feats, cfg, grad);
        const auto fd = oracle::finite_difference(
            [&](const std::vector<double>& p) {
                EnergyFunction c = fn;
                c.set_parameters(p);
                return contrastive_loss(c, feats, cfg).total(cfg.reg_weight);
            },
            theta);
        EXPECT_LE(oracle::max_relative_error(grad, fd), 1e-4) << trial;
    }
}

TEST(ContrastiveLoss, SmallStepsDecreaseMonotonically) {
    FeatureConfig fc;
    fc.num_types = 2;
    RngStream rng(31);
    EnergyFunction fn(fc, {8, 4}, rng);
    std::vector<double> theta(fn.num_parameters());
    for (double& t : theta) t = 0.5 * (2.0 * rng.uniform() - 1.0);
    fn.set_parameters(theta);
    std::vector<ContrastiveFeatures> groups(8);
    for (auto& g : groups) {
        for (int r = 0; r < 6; ++r) {
            std::vector<double> row(feature_dimension(fc));
            for (double& v : row) v = rng.normal();
            g.rows.push_back(row);
        }
    }
    for (auto objective : {NceObjective::kBinary, NceObjective::kMulti}) {
        TrainConfig cfg;
        cfg.objective = objective;
        EnergyFunction f = fn;
        double prev = mean_contrastive_loss(f, groups, cfg).objective;
        for (int step = 0; step < 10; ++step) {
            std::vector<double> grad(f.num_parameters(), 0.0);
            for (const auto& g : groups) (void)contrastive_loss(f, g, cfg, grad);
            std::vector<double> p(f.parameters().begin(), f.parameters().end());
            for (std::size_t i = 0; i < p.size(); ++i) p[i] -= 1e-4 * grad[i] / static_cast<double>(groups.size());
            f.set_parameters(p);
            const double now = mean_contrastive_loss(f, groups, cfg).objective;
            EXPECT_LT(now, prev);
            prev = now;
        }
    }
}

TEST(ContrastiveBatch, AllMembersShareThePrefix) {
    const EventSequence seq({{0.5, 0}, {1.5, 1}, {2.5, 0}}, 0.0, 3.0);
    const auto split = split_at_horizon(seq, 2.0, 3.0);
    HawkesExpModel m(0.5, 0.5, 1.0);
    const auto noise = draw_noise(m, split.prefix, 3.0, 5, RngStream(2));
    const auto batch = make_contrastive_batch(split, noise);
    ASSERT_EQ(batch.noises.size(), 5u);
    EXPECT_EQ(batch.positive, seq);
    for (const auto& n : batch.noises) {
        EXPECT_EQ(slice(n, 0.0, 2.0), slice(seq, 0.0, 2.0));
        EXPECT_EQ(n.t_end(), 3.0);
    }
}

TEST(TrainEnergy, EpochZeroBinaryLossIsLogTwoPerMember) {
    const auto train = type1_only_splits(20, 1);
    const auto dev = type1_only_splits(10, 2);
    PoissonModel base({1.0, 1.0});
    FeatureConfig fc;
    fc.num_types = 2;
    RngStream init(5);
    EnergyFunction fn(fc, {16, 8}, init);
    TrainConfig cfg;
    cfg.objective = NceObjective::kBinary;
    cfg.optimizer.max_epochs = 1;
    const auto res = train_energy(base, fn, train, dev, cfg, RngStream(9));
    ASSERT_GE(res.log.size(), 1u);
    EXPECT_EQ(res.log[0].epoch, 0u);
    EXPECT_NEAR(res.log[0].dev_loss, 6.0 * std::log(2.0), 1e-12);
    EXPECT_NEAR(res.log[0].train_loss, 6.0 * std::log(2.0), 1e-12);
}

TEST(TrainEnergy, SeparableTaskDrivesMultiLossDown) {
    const auto train = type1_only_splits(200, 3);
    const auto dev = type1_only_splits(50, 4);
    PoissonModel base({1.0, 1.0});
    FeatureConfig fc;
    fc.num_types = 2;
    RngStream init(6);
    EnergyFunction fn(fc, {16, 8}, init);
    TrainConfig cfg;
    cfg.objective = NceObjective::kMulti;
    cfg.optimizer.max_epochs = 50;
    const auto res = train_energy(base, fn, train, dev, cfg, RngStream(10));
    EXPECT_NEAR(res.log.front().dev_loss, std::log(6.0), 1e-12);
    EXPECT_LT(res.best_dev_loss, 0.3);
    // The returned parameters reproduce the best dev loss.
    const auto dev_groups = sample_contrastive_features(base, dev, fc, cfg, RngStream(10).substream("dev-noise"));
    EXPECT_NEAR(mean_contrastive_loss(res.energy, dev_groups, cfg).objective, res.best_dev_loss, 1e-12);
}

TEST(TrainEnergy, DeterministicGivenSeed) {
    const auto train = type1_only_splits(30, 5);
    const auto dev = type1_only_splits(10, 6);
    HawkesExpModel base({0.5, 0.5}, {0.2, 0.1, 0.1, 0.2}, {1.0, 1.0, 1.0, 1.0});
    FeatureConfig fc;
    fc.num_types = 2;
    TrainConfig cfg;
    cfg.regularize = true;
    cfg.optimizer.max_epochs = 4;
    RngStream i1(7), i2(7);
    const auto a = train_energy(base, EnergyFunction(fc, {8}, i1), train, dev, cfg, RngStream(11));
    const auto b = train_energy(base, EnergyFunction(fc, {8}, i2), train, dev, cfg, RngStream(11));
    ASSERT_EQ(a.log.size(), b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        EXPECT_EQ(a.log[i].train_loss, b.log[i].train_loss);
        EXPECT_EQ(a.log[i].dev_loss, b.log[i].dev_loss);
        EXPECT_EQ(a.log[i].omega, b.log[i].omega);
    }
    const std::vector<double> pa(a.energy.parameters().begin(), a.energy.parameters().end());
    const std::vector<double> pb(b.energy.parameters().begin(), b.energy.parameters().end());
    EXPECT_EQ(pa, pb);
    EXPECT_EQ(a.energy.feature_mean(), b.energy.feature_mean());
}

TEST(TrainConfig, Validation) {
    TrainConfig cfg;
    cfg.num_noise = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.num_noise = 5;
    cfg.regularize = true;
    cfg.beta = 0.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    EXPECT_THROW((void)parse_objective("ranking"), ConfigError);
}
