#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "qkmin/kmin.hpp"
#include "qkmin/verify.hpp"

using namespace qkmin;
using oracle::ValueGrid;

namespace {

const std::vector<double> kExample{0.1, 0.2, 0.3, 0.4, 0.5};

std::vector<std::size_t> sorted(std::vector<std::size_t> s) {
    std::sort(s.begin(), s.end());
    return s;
}

double three_sigma(double p, int n) { return 3.0 * std::sqrt(p * (1.0 - p) / n); }

}  // namespace

TEST(QSet, InsertContainsMembers) {
    kmin::QSet q(5);
    q.insert(3);
    q.insert(0);
    q.insert(3);
    EXPECT_EQ(q.size(), 2u);
    EXPECT_TRUE(q.contains(0));
    EXPECT_FALSE(q.contains(1));
    EXPECT_EQ(q.members(), (std::vector<std::size_t>{0, 3}));
    EXPECT_THROW(q.insert(5), std::out_of_range);
}

TEST(ApproxQuerySet, OneChargePerIndex) {
    const ValueGrid g(10);
    const auto o = oracle::build_exact_oracle(kExample, g);
    Rng rng(1);
    oracle::QueryLedger ledger;
    const std::vector<std::size_t> S{4, 1};
    const auto m = kmin::approx_query_set(o, S, rng, ledger);
    EXPECT_EQ(ledger.calls_plain(), 2u);
    ASSERT_EQ(m.size(), 2u);
    EXPECT_DOUBLE_EQ(m.at(1), g.value(g.round(0.2)));
    EXPECT_DOUBLE_EQ(m.at(4), g.value(g.round(0.5)));
}

TEST(StrongSampleCount, Formula) {
    EXPECT_EQ(kmin::strong_sample_count(0, 3, 0.1), 0u);
    EXPECT_EQ(kmin::strong_sample_count(2, 1, 0.1),
              static_cast<std::uint64_t>(std::ceil(6 * (std::log(2.0) + 1)) * 7));
    EXPECT_EQ(kmin::strong_sample_count(4, 4, 0.05),
              static_cast<std::uint64_t>(std::ceil(12 * (std::log(4.0) + 1)) * 8));
}

TEST(WeakMin, ExampleTwoSmallest) {
    const ValueGrid g(10);
    const auto o = oracle::build_exact_oracle(kExample, g);
    const double delta = 0.05;
    const int N = 500;
    int hit = 0;
    Rng rng(2);
    for (int i = 0; i < N; ++i) {
        oracle::QueryLedger ledger;
        const auto tr = kmin::find_approx_weak_min(o, 2, g.step() / 2, delta, rng, ledger);
        ASSERT_EQ(tr.set.size(), 2u);
        ASSERT_EQ(tr.iterations.size(), 2u);
        EXPECT_EQ(tr.iterations[0].t, 2u);
        EXPECT_EQ(tr.iterations[1].t, 1u);
        EXPECT_NE(tr.set[0], tr.set[1]);
        hit += sorted(tr.set) == std::vector<std::size_t>{0, 1};
    }
    EXPECT_GE(hit / static_cast<double>(N), 1 - delta - three_sigma(delta, N));
}

TEST(WeakMin, KEqualsNReturnsEverything) {
    const auto o = oracle::build_exact_oracle(kExample, ValueGrid(10));
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        oracle::QueryLedger ledger;
        const auto tr = kmin::find_approx_weak_min(o, 5, 0.001, 0.1, rng, ledger);
        EXPECT_EQ(sorted(tr.set), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
    }
}

TEST(WeakMin, IterationCallsAddUp) {
    const auto o = oracle::build_fejer_oracle(std::vector<double>{0.05, 0.6, 0.3, 0.9, 0.12, 0.44, 0.7, 0.2}, 6, 3,
                                              ValueGrid(8));
    Rng rng(4);
    oracle::QueryLedger ledger;
    const auto tr = kmin::find_approx_weak_min(o, 3, o.claimed_eps(), 0.1, rng, ledger);
    std::uint64_t sum = 0;
    for (const auto& it : tr.iterations) {
        sum += it.calls;
        EXPECT_DOUBLE_EQ(it.m_lower, static_cast<double>(it.t) / 8.0);
    }
    EXPECT_EQ(sum, ledger.calls());
}

TEST(WeakMin, RejectsBadK) {
    const auto o = oracle::build_exact_oracle(kExample, ValueGrid(10));
    Rng rng(5);
    oracle::QueryLedger ledger;
    EXPECT_THROW(kmin::find_approx_weak_min(o, 0, 0.01, 0.1, rng, ledger), std::invalid_argument);
    EXPECT_THROW(kmin::find_approx_weak_min(o, 6, 0.01, 0.1, rng, ledger), std::invalid_argument);
    EXPECT_THROW(kmin::find_approx_strong_min(o, 6, 0.01, 0.1, rng, ledger), std::invalid_argument);
}

TEST(StrongMin, ExampleTwoSmallest) {
    const ValueGrid g(10);
    const auto o = oracle::build_exact_oracle(kExample, g);
    const double delta = 0.05;
    const int N = 300;
    int hit = 0;
    Rng rng(6);
    for (int i = 0; i < N; ++i) {
        oracle::QueryLedger ledger;
        const auto tr = kmin::find_approx_strong_min(o, 2, g.step() / 2, delta, rng, ledger);
        ASSERT_EQ(tr.set.size(), 2u);
        EXPECT_EQ(tr.s0.size(), 2u);
        EXPECT_TRUE(std::is_sorted(tr.s0.begin(), tr.s0.end()));
        for (std::size_t j : tr.s0) EXPECT_TRUE(tr.v_tilde.count(j));
        EXPECT_DOUBLE_EQ(tr.threshold, tr.v_g - 5 * g.step() / 2);
        hit += sorted(tr.set) == std::vector<std::size_t>{0, 1};
    }
    EXPECT_GE(hit / static_cast<double>(N), 1 - delta - three_sigma(delta, N));
}

TEST(StrongMin, SetOrderedByMeasuredValue) {
    Rng rng(7);
    std::vector<double> v(32);
    for (auto& x : v) x = rng.uniform();
    const auto o = oracle::build_fejer_oracle(v, 6, 5, ValueGrid(9));
    oracle::QueryLedger ledger;
    const auto tr = kmin::find_approx_strong_min(o, 4, o.claimed_eps(), 0.1, rng, ledger);
    ASSERT_EQ(tr.set.size(), 4u);
    for (std::size_t j = 1; j < 4; ++j) {
        const double a = tr.v_tilde.at(tr.set[j - 1]), b = tr.v_tilde.at(tr.set[j]);
        EXPECT_TRUE(a < b || (a == b && tr.set[j - 1] < tr.set[j]));
    }
    for (const auto& [i, value] : tr.v_tilde)
        if (std::find(tr.set.begin(), tr.set.end(), i) == tr.set.end()) EXPECT_GE(value, tr.v_tilde.at(tr.set.back()));
}

TEST(StrongMin, AllEqualValuesAnySetIsStrong) {
    const std::vector<double> v(8, 0.4);
    const ValueGrid g(10);
    const auto o = oracle::build_exact_oracle(v, g);
    Rng rng(8);
    for (int i = 0; i < 50; ++i) {
        oracle::QueryLedger ledger;
        const auto tr = kmin::find_approx_strong_min(o, 3, g.step() / 2, 0.1, rng, ledger);
        EXPECT_EQ(std::set<std::size_t>(tr.set.begin(), tr.set.end()).size(), 3u);
        EXPECT_TRUE(verify::is_strong_set(v, tr.set, 0.0));
    }
}

TEST(StrongMin, DeterministicUnderSeed) {
    Rng vrng(9);
    std::vector<double> v(24);
    for (auto& x : v) x = vrng.uniform();
    const auto o = oracle::build_fejer_oracle(v, 6, 3, ValueGrid(8));
    auto once = [&] {
        Rng rng(123);
        oracle::QueryLedger ledger;
        const auto tr = kmin::find_approx_strong_min(o, 3, o.claimed_eps(), 0.1, rng, ledger);
        return std::make_pair(tr.set, ledger.calls());
    };
    EXPECT_EQ(once(), once());
}

TEST(StrongMin, ThresholdBelowEveryWeakValue) {
    Rng rng(10);
    std::vector<double> v(16);
    for (auto& x : v) x = rng.uniform();
    const auto o = oracle::build_exact_oracle(v, ValueGrid(10));
    oracle::QueryLedger ledger;
    const double eps = 0.01;
    const auto tr = kmin::find_approx_strong_min(o, 4, eps, 0.1, rng, ledger);
    EXPECT_DOUBLE_EQ(tr.v_g, *std::max_element(tr.v_prime.begin(), tr.v_prime.end()));
    EXPECT_LT(tr.threshold, tr.v_g);
    EXPECT_LE(tr.ell, 16u);
    EXPECT_EQ(tr.sample_count, kmin::strong_sample_count(tr.ell, 4, 0.1));
    for (std::size_t i : tr.samples) EXPECT_LE(o.grid().value(o.row(i)[0].y), tr.threshold);
}
