#include "hypro/core.hpp"

#include <gtest/gtest.h>

#include <vector>

using namespace hypro;

namespace {

EventSequence seq_of(std::vector<double> times, double t_start = 0.0, double t_end = 1.0) {
    std::vector<Event> ev;
    for (double t : times) ev.push_back({t, 0});
    return EventSequence(ev, t_start, t_end);
}

std::vector<double> times_of(const EventSequence& s) {
    std::vector<double> out;
    for (const auto& e : s) out.push_back(e.time);
    return out;
}

} // namespace

TEST(EventSequence, RejectsOutOfOrderAndOutOfWindowEvents) {
    EXPECT_THROW(seq_of({0.5, 0.4}), OrderingError);
    EXPECT_THROW(seq_of({0.5, 0.5}), OrderingError);
    EXPECT_THROW(seq_of({1.5}), RangeError);
    EXPECT_THROW(seq_of({-0.1}, -1.0, 1.0), RangeError);
    EXPECT_THROW(seq_of({}, 2.0, 1.0), RangeError);
}

TEST(SplitAtHorizon, BoundaryEventBelongsToPrefix) {
    const auto split = split_at_horizon(seq_of({0.1, 0.5, 0.9}), 0.5, 1.0);
    EXPECT_EQ(times_of(split.prefix), (std::vector<double>{0.1, 0.5}));
    EXPECT_EQ(times_of(split.truth), (std::vector<double>{0.9}));
    EXPECT_EQ(split.prefix.t_end(), 0.5);
    EXPECT_EQ(split.truth.t_start(), 0.5);
    EXPECT_EQ(split.truth.t_end(), 1.0);
}

TEST(SplitAtHorizon, EmptyContinuation) {
    const auto split = split_at_horizon(seq_of({0.1}), 0.5, 1.0);
    EXPECT_EQ(times_of(split.prefix), (std::vector<double>{0.1}));
    EXPECT_TRUE(split.truth.empty());
}

TEST(SplitAtHorizon, EventsAfterHorizonExcluded) {
    const auto split = split_at_horizon(seq_of({0.2, 0.4, 0.6, 0.8}), 0.3, 0.7);
    EXPECT_EQ(times_of(split.prefix), (std::vector<double>{0.2}));
    EXPECT_EQ(times_of(split.truth), (std::vector<double>{0.4, 0.6}));
}

TEST(SplitAtHorizon, OutOfRangeBoundsNameTheBound) {
    const auto s = seq_of({0.2});
    try {
        (void)split_at_horizon(s, -0.5, 0.7);
        FAIL();
    } catch (const RangeError& e) {
        EXPECT_NE(std::string(e.what()).find("T="), std::string::npos);
    }
    try {
        (void)split_at_horizon(s, 0.3, 1.7);
        FAIL();
    } catch (const RangeError& e) {
        EXPECT_NE(std::string(e.what()).find("T_prime"), std::string::npos);
    }
    EXPECT_THROW((void)split_at_horizon(s, 0.5, 0.5), RangeError);
}

TEST(SplitAtHorizon, RoundTripAndIdempotence) {
    std::vector<double> t;
    for (int i = 1; i <= 40; ++i) t.push_back(i * 0.024);
    const auto s = seq_of(t);
    for (double T : {0.0, 0.1, 0.37, 0.5, 0.96}) {
        for (double Tp : {0.97, 0.99, 1.0}) {
            if (!(T < Tp)) continue;
            const auto a = split_at_horizon(s, T, Tp);
            std::vector<double> joined = times_of(a.prefix);
            for (double x : times_of(a.truth)) joined.push_back(x);
            std::vector<double> expected;
            for (double x : t) {
                if (x <= Tp) expected.push_back(x);
            }
            EXPECT_EQ(joined, expected);
            const auto b = split_at_horizon(s, T, Tp);
            EXPECT_EQ(a.prefix, b.prefix);
            EXPECT_EQ(a.truth, b.truth);
        }
    }
}

TEST(SplitByTokenBudget, TruthHasExactlyBudgetEvents) {
    std::vector<double> t;
    for (int i = 1; i <= 59; ++i) t.push_back(i / 60.0);
    const auto split = split_by_token_budget(seq_of(t), 20);
    EXPECT_EQ(split.truth.size(), 20u);
    EXPECT_EQ(split.prefix.size(), 39u);
}

TEST(SplitByTokenBudget, SmallSequence) {
    const auto split = split_by_token_budget(seq_of({0.1, 0.2, 0.3, 0.4, 0.5}), 4);
    EXPECT_EQ(split.T, 0.1);
    EXPECT_EQ(split.truth.size(), 4u);
    EXPECT_EQ(split.T_prime, 1.0);
}

TEST(SplitByTokenBudget, TooShort) {
    EXPECT_THROW((void)split_by_token_budget(seq_of({0.1, 0.2, 0.3}), 5), LengthError);
}

TEST(PerturbDuplicateTimes, SeparatesTies) {
    std::vector<Event> ev{{0.1, 0}, {0.2, 1}, {0.2, 0}, {0.2, 1}, {0.3, 0}};
    std::size_t warnings = 0;
    auto saved = warning_sink();
    warning_sink() = [&](const std::string&) { ++warnings; };
    EXPECT_EQ(perturb_duplicate_times(ev), 2u);
    warning_sink() = saved;
    EXPECT_EQ(warnings, 1u);
    EXPECT_DOUBLE_EQ(ev[2].time, 0.2 + 1e-9);
    EXPECT_DOUBLE_EQ(ev[3].time, 0.2 + 2e-9);
    EXPECT_NO_THROW(EventSequence(ev, 0.0, 1.0));
}

TEST(PerturbDuplicateTimes, RejectsDecreasingTimes) {
    std::vector<Event> ev{{0.3, 0}, {0.2, 0}};
    EXPECT_THROW(perturb_duplicate_times(ev), OrderingError);
}

TEST(Dataset, ValidateChecksTypeRange) {
    Dataset d;
    d.num_types = 2;
    d.sequences.push_back(EventSequence({{0.1, 2}}, 0.0, 1.0));
    EXPECT_THROW(d.validate(), SchemaError);
    d.num_types = 3;
    EXPECT_NO_THROW(d.validate());
}
