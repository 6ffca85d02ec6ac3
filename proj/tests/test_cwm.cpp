#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Dense>

#include "cwmtsne/cwm.hpp"
#include "cwmtsne/error.hpp"
#include "cwmtsne/metrics.hpp"
#include "fixtures.hpp"

using namespace cwmtsne;
using namespace cwmtsne::cwm;

namespace {

double naive_normal_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& s) {
    const auto d = static_cast<double>(x.size());
    const Eigen::VectorXd r = x - mu;
    const double q = r.dot(s.inverse() * r);
    return std::exp(-0.5 * q) / std::sqrt(std::pow(2.0 * M_PI, d) * s.determinant());
}

CwmParams two_component_params() {
    CwmParams p;
    p.weights = Eigen::Vector2d(0.3, 0.7);
    p.means.resize(2, 2);
    p.means << 0.0, 0.0, 3.0, 1.0;
    Eigen::Matrix2d a, b;
    a << 1.0, 0.2, 0.2, 0.5;
    b << 0.7, -0.1, -0.1, 1.3;
    p.covariances = {a, b};
    p.reg_coeffs.resize(2, 3);
    p.reg_coeffs << 1.0, 0.5, -0.5, -1.0, 2.0, 0.0;
    p.output_vars = Eigen::Vector2d(0.25, 0.6);
    return p;
}

} // namespace

TEST(Densities, MatchDirectFormulas) {
    RandomSource rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 1 + trial % 4;
        const auto s = fixtures::random_spd(d, rng);
        Eigen::VectorXd x(d), mu(d);
        for (int j = 0; j < d; ++j) {
            x[j] = rng.normal();
            mu[j] = rng.normal();
        }
        EXPECT_NEAR(input_density(x, mu, s), naive_normal_pdf(x, mu, s), 1e-12);
        EXPECT_NEAR(std::exp(log_input_density(x, mu, s)), input_density(x, mu, s), 1e-14);

        Eigen::VectorXd beta(d + 1);
        for (int j = 0; j <= d; ++j) {
            beta[j] = rng.normal();
        }
        const double y = rng.normal();
        const double var = 0.3 + rng.uniform();
        const double mean = beta[0] + beta.tail(d).dot(x);
        const double expected = std::exp(-0.5 * (y - mean) * (y - mean) / var) / std::sqrt(2 * M_PI * var);
        EXPECT_NEAR(output_density(y, x, beta, var), expected, 1e-12);
    }
}

TEST(EStep, ResponsibilitiesAndLoglikAgreeWithDirectSum) {
    RandomSource rng(4);
    const auto s = fixtures::cwm_bivariate(60, rng);
    const auto data = s.dataset();
    const auto p = two_component_params();
    const auto es = e_step(data, p);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < 60; ++i) {
        const Eigen::VectorXd x = s.x.row(i).transpose();
        double total = 0.0;
        double parts[2];
        for (int g = 0; g < 2; ++g) {
            parts[g] = p.weights[g] * naive_normal_pdf(x, p.means.row(g).transpose(), p.covariances[g]) *
                       output_density(s.y[i], x, p.reg_coeffs.row(g).transpose(), p.output_vars[g]);
            total += parts[g];
        }
        ll += std::log(total);
        for (int g = 0; g < 2; ++g) {
            EXPECT_NEAR(es.responsibilities(i, g), parts[g] / total, 1e-12);
        }
    }
    EXPECT_NEAR(es.loglik, ll, 1e-9);
}

TEST(EStep, FarOutlierStaysFinite) {
    auto p = two_component_params();
    LabeledDataset d;
    Eigen::MatrixXd x(2, 2);
    x << 0.0, 0.0, 400.0, -300.0;
    d.features = DataMatrix(x);
    d.response = Eigen::Vector2d(0.0, 50.0);
    const auto es = e_step(d, p);
    EXPECT_TRUE(std::isfinite(es.loglik));
    EXPECT_NEAR(es.responsibilities.row(1).sum(), 1.0, 1e-12);
}

TEST(MStep, HardAssignmentsGiveGroupwiseEstimates) {
    RandomSource rng(13);
    const auto s = fixtures::cwm_bivariate(90, rng);
    const auto data = s.dataset();
    Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(90, 3);
    for (int i = 0; i < 90; ++i) {
        resp(i, s.labels[i] - 1) = 1.0;
    }
    const auto ms = m_step(data, resp, cov::CovModel::VVV);
    for (int g = 0; g < 3; ++g) {
        std::vector<int> rows;
        for (int i = 0; i < 90; ++i) {
            if (s.labels[i] == g + 1) {
                rows.push_back(i);
            }
        }
        const auto n = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd xg(n, 2), design(n, 3);
        Eigen::VectorXd yg(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            xg.row(k) = s.x.row(rows[k]);
            design(k, 0) = 1.0;
            design.block(k, 1, 1, 2) = s.x.row(rows[k]);
            yg[k] = s.y[rows[k]];
        }
        EXPECT_NEAR(ms.params.weights[g], 1.0 / 3.0, 1e-12);
        const Eigen::RowVectorXd mean = xg.colwise().mean();
        EXPECT_LT((ms.params.means.row(g) - mean).norm(), 1e-12);
        const Eigen::MatrixXd centered = xg.rowwise() - mean;
        const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
        EXPECT_LT((ms.params.covariances[g] - cov).norm(), 1e-10);
        const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(yg);
        EXPECT_LT((ms.params.reg_coeffs.row(g).transpose() - beta).norm(), 1e-8);
        const double var = (yg - design * beta).squaredNorm() / static_cast<double>(n);
        EXPECT_NEAR(ms.params.output_vars[g], var, 1e-10);
    }
}

TEST(MStep, EmptyColumnRaises) {
    RandomSource rng(1);
    const auto data = fixtures::cwm_bivariate(30, rng).dataset();
    Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(30, 2);
    resp.col(0).setOnes();
    try {
        m_step(data, resp, cov::CovModel::VVV);
        FAIL() << "expected EmptyComponentError";
    } catch (const EmptyComponentError& e) {
        EXPECT_EQ(e.component(), 1u);
    }
}

TEST(Initialize, UsesDistinctRowsAndValidParams) {
    RandomSource rng(2);
    const auto data = fixtures::cwm_bivariate(40, rng).dataset();
    for (auto strategy : {InitStrategy::random, InitStrategy::kmeans_like}) {
        RandomSource r(9);
        const auto p = initialize(data, 4, strategy, r);
        EXPECT_NO_THROW(p.validate());
        EXPECT_EQ(p.components(), 4);
        for (int a = 0; a < 4; ++a) {
            for (int b = a + 1; b < 4; ++b) {
                EXPECT_GT((p.means.row(a) - p.means.row(b)).norm(), 0.0);
            }
        }
    }
    RandomSource r(1);
    EXPECT_THROW(initialize(data, 41, InitStrategy::random, r), ConfigError);
    EXPECT_EQ(parse_init_strategy("kmeans"), InitStrategy::kmeans_like);
    EXPECT_THROW(parse_init_strategy("spectral"), ConfigError);
}

TEST(Fit, LoglikIsMonotoneForEveryModel) {
    RandomSource rng(17);
    const auto data = fixtures::cwm_bivariate(150, rng).dataset();
    for (auto m : cov::kAllModels) {
        FitConfig cfg;
        cfg.components = 3;
        cfg.model = m;
        cfg.n_starts = 2;
        const auto r = fit(data, cfg, RandomSource(3));
        std::size_t next_reseed = 0;
        for (std::size_t t = 1; t < r.loglik_trace.size(); ++t) {
            if (next_reseed < r.reseed_points.size() && r.reseed_points[next_reseed] == t) {
                ++next_reseed;
                continue;
            }
            EXPECT_GT(r.loglik_trace[t] - r.loglik_trace[t - 1], -1e-8) << cov::to_string(m) << " step " << t;
        }
        EXPECT_EQ(r.hard_labels, predict_cluster(r.params, data));
        EXPECT_LE(r.complete_loglik, r.loglik() + 1e-9);
    }
}

TEST(Fit, RecoversTwoRegressionLines) {
    RandomSource rng(23);
    const auto s = fixtures::two_line_cwm(300, 0.5, rng);
    FitConfig cfg;
    cfg.components = 2;
    const auto r = fit(s.dataset(), cfg, RandomSource(1));
    EXPECT_TRUE(r.converged);
    const auto ari = metrics::compare_partitions(r.hard_labels, s.labels).hubert_arabie;
    ASSERT_TRUE(ari);
    EXPECT_GT(*ari, 0.99);
    const double s0 = r.params.reg_coeffs(0, 1), s1 = r.params.reg_coeffs(1, 1);
    EXPECT_NEAR(std::min(s0, s1), -2.0, 0.1);
    EXPECT_NEAR(std::max(s0, s1), 2.0, 0.1);
}

TEST(Fit, DeterministicPerSeed) {
    RandomSource rng(5);
    const auto data = fixtures::cwm_bivariate(90, rng).dataset();
    FitConfig cfg;
    cfg.components = 3;
    cfg.model = cov::CovModel::EVE;
    const auto a = fit(data, cfg, RandomSource(11));
    const auto b = fit(data, cfg, RandomSource(11));
    EXPECT_EQ(a.loglik_trace, b.loglik_trace);
    EXPECT_EQ(a.hard_labels, b.hard_labels);
}

TEST(Fit, UnivariateInputRemapsModel) {
    RandomSource rng(6);
    const auto s = fixtures::two_line_cwm(100, 0.5, rng);
    FitConfig cfg;
    cfg.model = cov::CovModel::EVV;
    const auto r = fit(s.dataset(), cfg, RandomSource(0));
    EXPECT_EQ(r.params.cov_model, cov::CovModel::EII);
    EXPECT_EQ(r.requested_model, cov::CovModel::EVV);
    EXPECT_FALSE(r.warnings.empty());
}

TEST(ArgmaxLabels, TiesGoToLowestComponent) {
    Eigen::MatrixXd s(3, 3);
    s << 0.2, 0.5, 0.3, 0.4, 0.4, 0.2, 0.1, 0.1, 0.8;
    EXPECT_EQ(argmax_labels(s), (std::vector<int>{2, 1, 3}));
}
