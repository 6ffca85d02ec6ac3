#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "cwmtsne/covariance.hpp"
#include "cwmtsne/error.hpp"
#include "fixtures.hpp"

using namespace cwmtsne;
using namespace cwmtsne::cov;

namespace {

ScatterInput random_scatter(int d, int G, RandomSource& rng) {
    ScatterInput in;
    in.masses.resize(G);
    for (int g = 0; g < G; ++g) {
        const double n = 5.0 + 45.0 * rng.uniform();
        in.masses[g] = n;
        in.scatters.push_back(n * fixtures::random_spd(d, rng));
    }
    return in;
}

Eigen::VectorXd sorted_eigenvalues(const Eigen::MatrixXd& s) {
    Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s).eigenvalues();
    std::sort(ev.data(), ev.data() + ev.size());
    return ev;
}

double relative_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).norm() / std::max(1.0, b.norm());
}

} // namespace

TEST(CovModel, ParseAndPrint) {
    for (auto m : kAllModels) {
        EXPECT_EQ(parse_model(to_string(m)), m);
        EXPECT_EQ(kAllModels[model_index(m)], m);
    }
    EXPECT_EQ(parse_model("vvv"), CovModel::VVV);
    EXPECT_EQ(parse_model_list("all").size(), 14u);
    EXPECT_EQ(parse_model_list("EII, VVV"), (std::vector<CovModel>{CovModel::EII, CovModel::VVV}));
    EXPECT_THROW(parse_model("XYZ"), ConfigError);
    EXPECT_THROW(parse_model_list(""), ConfigError);
}

TEST(CovModel, UnivariateRemap) {
    EXPECT_EQ(effective_model(CovModel::EEV, 1), CovModel::EII);
    EXPECT_EQ(effective_model(CovModel::VVV, 1), CovModel::VII);
    EXPECT_EQ(effective_model(CovModel::VVV, 2), CovModel::VVV);
}

TEST(ParamCount, SmallAndHighDimensionalTable) {
    struct Row {
        CovModel model;
        long long d3, d178;
    };
    const Row rows[] = {
        {CovModel::EII, 1, 1},      {CovModel::VII, 5, 5},          {CovModel::EEI, 3, 178},
        {CovModel::VEI, 7, 182},    {CovModel::EVI, 11, 886},       {CovModel::VVI, 15, 890},
        {CovModel::EEE, 6, 15931},  {CovModel::VEE, 10, 15935},     {CovModel::EVE, 14, 16639},
        {CovModel::EEV, 18, 78943}, {CovModel::VVE, 18, 16643},     {CovModel::VEV, 22, 78947},
        {CovModel::EVV, 26, 79651}, {CovModel::VVV, 30, 79655},
    };
    for (const auto& r : rows) {
        EXPECT_EQ(param_count(r.model, 3, 5), r.d3) << to_string(r.model);
        EXPECT_EQ(param_count(r.model, 178, 5), r.d178) << to_string(r.model);
    }
}

TEST(ParamCount, SingleComponentCollapses) {
    // With G = 1 the V/E distinction is vacuous.
    for (long long d : {2, 4, 7}) {
        EXPECT_EQ(param_count(CovModel::VVV, d, 1), param_count(CovModel::EEE, d, 1));
        EXPECT_EQ(param_count(CovModel::VVI, d, 1), param_count(CovModel::EEI, d, 1));
        EXPECT_EQ(param_count(CovModel::VII, d, 1), param_count(CovModel::EII, d, 1));
    }
}

TEST(Decompose, RoundTripAndNormalization) {
    RandomSource rng(12);
    for (int d : {1, 2, 3, 5}) {
        const auto s = fixtures::random_spd(d, rng);
        const auto e = decompose(s);
        EXPECT_NEAR(e.volume, std::pow(s.determinant(), 1.0 / d), 1e-10);
        EXPECT_NEAR(e.shape.prod(), 1.0, 1e-12);
        for (int k = 1; k < d; ++k) {
            EXPECT_GE(e.shape[k - 1], e.shape[k]);
        }
        EXPECT_LT((e.orientation.transpose() * e.orientation - Eigen::MatrixXd::Identity(d, d)).norm(), 1e-12);
        EXPECT_LT(relative_gap(compose(e), s), 1e-12);
    }
    Eigen::MatrixXd diag = Eigen::Vector3d(1.0, 4.0, 2.0).asDiagonal();
    const auto e = decompose(diag);
    EXPECT_EQ(e.orientation.cwiseAbs().sum(), 3.0);
    Eigen::Matrix2d bad;
    bad << 1, 0, 0, -1;
    EXPECT_THROW(decompose(bad), DataError);
}

TEST(MStep, ClosedFormOracles) {
    RandomSource rng(5);
    const int d = 3, G = 3;
    const auto in = random_scatter(d, G, rng);
    const double n = in.masses.sum();
    Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(d, d);
    for (int g = 0; g < G; ++g) {
        pooled += in.scatters[g];
    }

    const auto vvv = mstep_covariances(CovModel::VVV, in);
    const auto eee = mstep_covariances(CovModel::EEE, in);
    const auto eii = mstep_covariances(CovModel::EII, in);
    const auto vii = mstep_covariances(CovModel::VII, in);
    const auto eei = mstep_covariances(CovModel::EEI, in);
    const auto vvi = mstep_covariances(CovModel::VVI, in);
    for (int g = 0; g < G; ++g) {
        const Eigen::MatrixXd wg = in.scatters[g] / in.masses[g];
        EXPECT_LT((vvv.covariances[g] - wg).norm(), 1e-10);
        EXPECT_LT((eee.covariances[g] - pooled / n).norm(), 1e-10);
        const Eigen::MatrixXd sph = pooled.trace() / (n * d) * Eigen::MatrixXd::Identity(d, d);
        EXPECT_LT((eii.covariances[g] - sph).norm(), 1e-10);
        const Eigen::MatrixXd vsph = wg.trace() / d * Eigen::MatrixXd::Identity(d, d);
        EXPECT_LT((vii.covariances[g] - vsph).norm(), 1e-10);
        EXPECT_LT((eei.covariances[g] - Eigen::MatrixXd(pooled.diagonal().asDiagonal()) / n).norm(), 1e-10);
        EXPECT_LT((vvi.covariances[g] - Eigen::MatrixXd(wg.diagonal().asDiagonal())).norm(), 1e-10);
    }
}

TEST(MStep, EveryModelIsDominatedByVvv) {
    RandomSource rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 2 + trial % 3;
        const int G = 2 + trial % 2;
        const auto in = random_scatter(d, G, rng);
        const double q_vvv = gaussian_q(mstep_covariances(CovModel::VVV, in).covariances, in);
        for (auto m : kAllModels) {
            const double q = gaussian_q(mstep_covariances(m, in).covariances, in);
            EXPECT_LE(q, q_vvv + 1e-8) << to_string(m) << " trial " << trial;
        }
    }
}

TEST(MStep, NestedModelsOrderQ) {
    RandomSource rng(78);
    const auto in = random_scatter(3, 3, rng);
    auto q = [&](CovModel m) { return gaussian_q(mstep_covariances(m, in).covariances, in); };
    const double tol = 1e-8;
    EXPECT_LE(q(CovModel::EII), q(CovModel::VII) + tol);
    EXPECT_LE(q(CovModel::EII), q(CovModel::EEI) + tol);
    EXPECT_LE(q(CovModel::EEI), q(CovModel::VEI) + tol);
    EXPECT_LE(q(CovModel::VEI), q(CovModel::VVI) + tol);
    EXPECT_LE(q(CovModel::EEI), q(CovModel::EEE) + tol);
    EXPECT_LE(q(CovModel::EEE), q(CovModel::VEE) + tol);
    EXPECT_LE(q(CovModel::EEE), q(CovModel::EEV) + tol);
    EXPECT_LE(q(CovModel::VEE), q(CovModel::VVE) + tol);
    EXPECT_LE(q(CovModel::EEV), q(CovModel::EVV) + tol);
    EXPECT_LE(q(CovModel::VEV), q(CovModel::VVV) + tol);
}

TEST(MStep, ConstraintPatternsHold) {
    RandomSource rng(31);
    const int d = 3, G = 3;
    const auto in = random_scatter(d, G, rng);
    for (auto m : kAllModels) {
        const auto code = std::string(to_string(m));
        const auto est = mstep_covariances(m, in);
        ASSERT_EQ(est.covariances.size(), static_cast<std::size_t>(G));
        std::vector<EigenDecomposition> parts;
        for (const auto& s : est.covariances) {
            parts.push_back(decompose(s));
        }
        for (int g = 1; g < G; ++g) {
            const auto& a = est.covariances[0];
            const auto& b = est.covariances[g];
            if (code[0] == 'E') {
                EXPECT_NEAR(parts[g].volume, parts[0].volume, 1e-8 * parts[0].volume) << code;
            }
            if (code[1] == 'E' && code[2] != 'V') {
                EXPECT_LT(relative_gap(b / parts[g].volume, a / parts[0].volume), 1e-8) << code;
            }
            if (code[1] == 'E' && code[2] == 'V') {
                EXPECT_LT((sorted_eigenvalues(b) / parts[g].volume - sorted_eigenvalues(a) / parts[0].volume).norm(),
                          1e-8) << code;
            }
            if (code[2] == 'E') {
                // A shared orientation makes the matrices commute.
                EXPECT_LT((a * b - b * a).norm() / (a.norm() * b.norm()), 1e-8) << code;
            }
        }
        for (const auto& s : est.covariances) {
            if (code[2] == 'I') {
                EXPECT_EQ(Eigen::MatrixXd(s.diagonal().asDiagonal()), s) << code;
            }
            if (code[1] == 'I') {
                EXPECT_LT((s - s(0, 0) * Eigen::MatrixXd::Identity(d, d)).norm(), 1e-12) << code;
            }
        }
    }
}

TEST(MStep, WarmStartNeverLosesGround) {
    RandomSource rng(90);
    for (auto m : {CovModel::VEI, CovModel::VEE, CovModel::EVE, CovModel::VVE, CovModel::VEV}) {
        const auto in = random_scatter(3, 3, rng);
        const auto first = mstep_covariances(m, in);
        const auto in2 = random_scatter(3, 3, rng);
        const double q_warm = gaussian_q(first.covariances, in2);
        const auto second = mstep_covariances(m, in2, &first.covariances);
        EXPECT_GE(gaussian_q(second.covariances, in2), q_warm - 1e-10) << to_string(m);
    }
}

TEST(MStep, SingularScatterIsRegularized) {
    ScatterInput in;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 2);
    w(0, 0) = 4.0;
    in.scatters = {w, 2.0 * Eigen::MatrixXd::Identity(2, 2)};
    in.masses = Eigen::Vector2d(2.0, 2.0);
    const auto est = mstep_covariances(CovModel::VVV, in);
    EXPECT_TRUE(est.regularized);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(est.covariances[0]).eigenvalues().minCoeff(), 0.0);
}
