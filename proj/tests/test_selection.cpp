#include <gtest/gtest.h>

#include <cmath>

#include "cwmtsne/error.hpp"
#include "cwmtsne/selection.hpp"
#include "fixtures.hpp"

using namespace cwmtsne;
using namespace cwmtsne::selection;

TEST(Criteria, NamesRoundTrip) {
    for (auto c : kAllCriteria) {
        EXPECT_EQ(parse_criterion(to_string(c)), c);
    }
    EXPECT_EQ(parse_criterion("bic"), Criterion::BIC);
    EXPECT_THROW(parse_criterion("DIC"), ConfigError);
}

TEST(Criteria, ParameterCountAddsAllBlocks) {
    // weights 2, means 6, covariances 9, regressions 9, output variances 3
    EXPECT_EQ(count_parameters(cov::CovModel::VVV, 2, 3), 29);
    // weights 0, means 2, covariance 1, regression 3, output variance 1
    EXPECT_EQ(count_parameters(cov::CovModel::EII, 2, 1), 7);
}

TEST(Criteria, FormulasAgainstDirectComputation) {
    const double ll = -512.25, lc = -530.5, lh = -7.75;
    const long long k = 17, n = 240;
    const auto cs = information_criteria(ll, lc, lh, k, n);
    const double ln = std::log(240.0);
    EXPECT_DOUBLE_EQ(*cs.get(Criterion::BIC), 2 * ll - 17 * ln);
    EXPECT_DOUBLE_EQ(*cs.get(Criterion::AIC), 2 * ll - 34);
    EXPECT_DOUBLE_EQ(*cs.get(Criterion::AIC3), 2 * ll - 51);
    const double aicc = 2 * ll - 34 - 2.0 * 17 * 18 / (240 - 18);
    EXPECT_DOUBLE_EQ(*cs.get(Criterion::AICc), aicc);
    EXPECT_DOUBLE_EQ(*cs.get(Criterion::AICu), aicc - 240 * std::log(240.0 / 222.0));
    EXPECT_DOUBLE_EQ(*cs.get(Criterion::CAIC), 2 * ll - 17 * (1 + ln));
    EXPECT_DOUBLE_EQ(*cs.get(Criterion::AWE), 2 * lc - 2 * 17 * (1.5 + ln));
    EXPECT_DOUBLE_EQ(*cs.get(Criterion::ICL), 2 * ll - 17 * ln + 2 * lh);
    EXPECT_EQ(cs.n_params, 17);
}

TEST(Criteria, SmallSampleCorrectionsUndefined) {
    const auto cs = information_criteria(-10.0, -11.0, -0.5, 20, 21);
    EXPECT_FALSE(cs.get(Criterion::AICc));
    EXPECT_FALSE(cs.get(Criterion::AICu));
    EXPECT_TRUE(cs.get(Criterion::BIC));
}

TEST(Sweep, GridOrderBestCellsAndIclBound) {
    RandomSource rng(3);
    const auto data = fixtures::diagonal_cwm_three(150, rng).dataset();
    SweepConfig cfg;
    cfg.components = {1, 2, 3, 4};
    cfg.models = {cov::CovModel::EII, cov::CovModel::VVI};
    cfg.fit.n_starts = 3;
    const auto r = sweep(data, cfg, RandomSource(1));
    ASSERT_EQ(r.cells.size(), 8u);
    EXPECT_EQ(r.cells[0].components, 1);
    EXPECT_EQ(r.cells[1].model, cov::CovModel::VVI);
    EXPECT_EQ(r.cells[7].components, 4);
    for (const auto& cell : r.cells) {
        ASSERT_TRUE(cell.estimated) << cell.failure_reason;
        EXPECT_LE(*cell.criteria->get(Criterion::ICL), *cell.criteria->get(Criterion::BIC));
    }
    for (auto c : kAllCriteria) {
        ASSERT_TRUE(r.best.count(c));
        const double best = *r.cells[r.best.at(c)].criteria->get(c);
        for (const auto& cell : r.cells) {
            if (auto v = cell.criteria->get(c)) {
                EXPECT_LE(*v, best);
            }
        }
    }
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
    RandomSource rng(4);
    const auto data = fixtures::cwm_bivariate(90, rng).dataset();
    SweepConfig cfg;
    cfg.components = {1, 2, 3};
    cfg.models = {cov::CovModel::EEE, cov::CovModel::VEV, cov::CovModel::VVV};
    cfg.fit.n_starts = 2;
    cfg.threads = 1;
    const auto a = sweep(data, cfg, RandomSource(9));
    cfg.threads = 4;
    const auto b = sweep(data, cfg, RandomSource(9));
    ASSERT_EQ(a.cells.size(), b.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        EXPECT_EQ(a.cells[i].fit->loglik_trace, b.cells[i].fit->loglik_trace);
    }
    EXPECT_EQ(a.best, b.best);
}

TEST(Sweep, CellSeedIndependentOfGrid) {
    RandomSource rng(5);
    const auto data = fixtures::cwm_bivariate(60, rng).dataset();
    SweepConfig one;
    one.components = {2};
    one.models = {cov::CovModel::VVV};
    one.fit.n_starts = 2;
    SweepConfig many = one;
    many.components = {1, 2};
    many.models = {cov::CovModel::EII, cov::CovModel::VVV};
    const auto a = sweep(data, one, RandomSource(2));
    const auto b = sweep(data, many, RandomSource(2));
    EXPECT_EQ(a.cells[0].fit->loglik_trace, b.cells[3].fit->loglik_trace);
    EXPECT_NE(cell_seed_index(2, cov::CovModel::VVV), cell_seed_index(3, cov::CovModel::VVV));
}

TEST(Sweep, FailedCellsAreKeptWithReason) {
    RandomSource rng(6);
    const auto data = fixtures::cwm_bivariate(6, rng).dataset();
    SweepConfig cfg;
    cfg.components = {1, 9};
    cfg.models = {cov::CovModel::EII};
    cfg.fit.n_starts = 1;
    const auto r = sweep(data, cfg, RandomSource(0));
    ASSERT_EQ(r.cells.size(), 2u);
    EXPECT_TRUE(r.cells[0].estimated);
    EXPECT_FALSE(r.cells[1].estimated);
    EXPECT_FALSE(r.cells[1].failure_reason.empty());
    EXPECT_FALSE(r.cells[1].criteria);
    EXPECT_EQ(r.best.at(Criterion::BIC), 0u);

    cfg.components = {9};
    EXPECT_THROW(sweep(data, cfg, RandomSource(0)), DegeneracyError);
}
