#include <gtest/gtest.h>

#include <cmath>
#include <optional>

#include "cwmtsne/error.hpp"
#include "cwmtsne/metrics.hpp"
#include "fixtures.hpp"

using namespace cwmtsne;
using namespace cwmtsne::metrics;

namespace {

struct Oracle {
    long long a = 0, b = 0, c = 0, d = 0;
    std::optional<double> rand, ha, ma, fm, jaccard;
};

std::optional<double> safe_div(double num, double den) {
    if (den == 0.0) {
        return std::nullopt;
    }
    return num / den;
}

// Pair-by-pair enumeration; squared-count sums follow from the pair counts.
Oracle brute_force(const std::vector<int>& p, const std::vector<int>& t) {
    Oracle o;
    const auto n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool sp = p[i] == p[j], st = t[i] == t[j];
            o.a += sp && st;
            o.b += sp && !st;
            o.c += !sp && st;
            o.d += !sp && !st;
        }
    }
    const double a = o.a, b = o.b, c = o.c, d = o.d, m = a + b + c + d, nn = static_cast<double>(n);
    o.rand = safe_div(a + d, m);
    const double e = (a + b) * (a + c) / m;
    o.ha = safe_div(a - e, 0.5 * ((a + b) + (a + c)) - e);
    const double sj = 2 * a + nn, sp = 2 * (a + b) + nn, st = 2 * (a + c) + nn;
    const double em = sp * st / (nn * nn);
    o.ma = safe_div(sj - em, 0.5 * (sp + st) - em);
    o.fm = safe_div(a, std::sqrt((a + b) * (a + c)));
    o.jaccard = safe_div(a, a + b + c);
    return o;
}

void expect_close(const std::optional<double>& got, const std::optional<double>& want, const char* what) {
    ASSERT_EQ(got.has_value(), want.has_value()) << what;
    if (want) {
        EXPECT_NEAR(*got, *want, 1e-12) << what;
    }
}

} // namespace

TEST(Contingency, CountsAndTotals) {
    const std::vector<int> p{1, 1, 2, 2, 2, 5};
    const std::vector<int> t{3, 3, 3, 4, 4, 4};
    const auto tab = contingency(p, t);
    EXPECT_EQ(tab.pred_labels, (std::vector<int>{1, 2, 5}));
    EXPECT_EQ(tab.true_labels, (std::vector<int>{3, 4}));
    EXPECT_EQ(tab.at(0, 0), 2);
    EXPECT_EQ(tab.at(1, 0), 1);
    EXPECT_EQ(tab.at(1, 1), 2);
    EXPECT_EQ(tab.at(2, 1), 1);
    EXPECT_EQ(tab.pred_totals, (std::vector<std::int64_t>{2, 3, 1}));
    EXPECT_EQ(tab.true_totals, (std::vector<std::int64_t>{3, 3}));
    EXPECT_EQ(tab.total, 6);
}

TEST(PairCounts, SmallExampleByHand) {
    const std::vector<int> p{1, 1, 2, 2};
    const std::vector<int> t{1, 2, 2, 2};
    const auto pc = pair_counts(p, t);
    EXPECT_EQ(pc.same_same, 1);
    EXPECT_EQ(pc.same_diff, 1);
    EXPECT_EQ(pc.diff_same, 2);
    EXPECT_EQ(pc.diff_diff, 2);
    EXPECT_EQ(pc.total(), 6);
}

TEST(PairCounts, RejectsMismatchedOrTinyInput) {
    EXPECT_THROW(pair_counts(std::vector<int>{1, 2}, std::vector<int>{1}), DataError);
    EXPECT_THROW(pair_counts(std::vector<int>{1}, std::vector<int>{1}), DataError);
}

TEST(Indices, MatchBruteForceOracle) {
    RandomSource rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 2 + static_cast<int>(rng.index(24));
        const auto p = fixtures::random_partition(n, 1 + static_cast<int>(rng.index(6)), rng);
        const auto t = fixtures::random_partition(n, 1 + static_cast<int>(rng.index(6)), rng);
        const auto o = brute_force(p, t);
        const auto pc = pair_counts(p, t);
        EXPECT_EQ(pc.same_same, o.a);
        EXPECT_EQ(pc.same_diff, o.b);
        EXPECT_EQ(pc.diff_same, o.c);
        EXPECT_EQ(pc.diff_diff, o.d);
        const auto idx = compare_partitions(p, t);
        expect_close(idx.rand, o.rand, "rand");
        expect_close(idx.hubert_arabie, o.ha, "HA");
        expect_close(idx.morey_agresti, o.ma, "MA");
        expect_close(idx.fowlkes_mallows, o.fm, "FM");
        expect_close(idx.jaccard, o.jaccard, "Jaccard");
    }
}

TEST(Indices, IdenticalPartitionsScoreOne) {
    const std::vector<int> p{1, 1, 2, 2, 3, 3, 3};
    std::vector<int> relabeled{7, 7, 4, 4, 9, 9, 9};
    for (const auto& q : {p, relabeled}) {
        const auto idx = compare_partitions(p, q);
        EXPECT_DOUBLE_EQ(*idx.rand, 1.0);
        EXPECT_DOUBLE_EQ(*idx.hubert_arabie, 1.0);
        EXPECT_DOUBLE_EQ(*idx.morey_agresti, 1.0);
        EXPECT_DOUBLE_EQ(*idx.fowlkes_mallows, 1.0);
        EXPECT_DOUBLE_EQ(*idx.jaccard, 1.0);
    }
}

TEST(Indices, DegenerateDenominatorsAreAbsent) {
    const std::vector<int> singletons{1, 2, 3, 4};
    const auto idx = compare_partitions(singletons, singletons);
    EXPECT_DOUBLE_EQ(*idx.rand, 1.0);
    EXPECT_FALSE(idx.fowlkes_mallows);
    EXPECT_FALSE(idx.jaccard);
    EXPECT_FALSE(idx.hubert_arabie);
}

TEST(Indices, SymmetricInArgumentOrder) {
    RandomSource rng(3);
    const auto p = fixtures::random_partition(20, 3, rng);
    const auto t = fixtures::random_partition(20, 4, rng);
    const auto ab = compare_partitions(p, t);
    const auto ba = compare_partitions(t, p);
    EXPECT_NEAR(*ab.hubert_arabie, *ba.hubert_arabie, 1e-15);
    EXPECT_NEAR(*ab.morey_agresti, *ba.morey_agresti, 1e-15);
    EXPECT_NEAR(*ab.fowlkes_mallows, *ba.fowlkes_mallows, 1e-15);
}

TEST(MajorityAccuracy, ModalMapping) {
    const std::vector<int> p{1, 1, 1, 2, 2, 3};
    const std::vector<int> t{5, 5, 6, 6, 6, 5};
    const auto map = majority_mapping(p, t);
    EXPECT_EQ(map, (std::vector<std::pair<int, int>>{{1, 5}, {2, 6}, {3, 5}}));
    EXPECT_DOUBLE_EQ(majority_accuracy(p, t), 5.0 / 6.0);
    // Ties resolve to the smaller reference label.
    EXPECT_EQ(majority_mapping(std::vector<int>{1, 1}, std::vector<int>{4, 2}),
              (std::vector<std::pair<int, int>>{{1, 2}}));
}
