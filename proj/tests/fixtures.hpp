#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "cwmtsne/data.hpp"
#include "cwmtsne/random.hpp"

namespace cwmtsne::fixtures {

struct Sample {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<int> labels;  // 1-based

    LabeledDataset dataset() const {
        LabeledDataset d;
        d.features = DataMatrix(x);
        d.response = y;
        d.reference_labels = labels;
        return d;
    }
};

// Isotropic Gaussian clusters with centers spaced `separation` apart along
// random directions. Sizes cycle through the clusters.
inline Sample gaussian_mixture(int n, int d, int k, double separation, RandomSource& rng) {
    Eigen::MatrixXd centers(k, d);
    for (int c = 0; c < k; ++c) {
        for (int j = 0; j < d; ++j) {
            centers(c, j) = separation * rng.normal();
        }
    }
    Sample s;
    s.x.resize(n, d);
    s.y = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        const int c = i % k;
        s.labels.push_back(c + 1);
        for (int j = 0; j < d; ++j) {
            s.x(i, j) = centers(c, j) + rng.normal();
        }
    }
    return s;
}

// Two linear regimes: x ~ N(0,1) with y = 2x + e, and x ~ N(10,1) with
// y = -2x + e, e ~ N(0, sigma^2).
inline Sample two_line_cwm(int n, double sigma, RandomSource& rng) {
    Sample s;
    s.x.resize(n, 1);
    s.y.resize(n);
    for (int i = 0; i < n; ++i) {
        const int g = i % 2;
        const double x = (g == 0 ? 0.0 : 10.0) + rng.normal();
        s.x(i, 0) = x;
        s.y[i] = (g == 0 ? 2.0 : -2.0) * x + sigma * rng.normal();
        s.labels.push_back(g + 1);
    }
    return s;
}

// Bivariate CWM with full component covariances and distinct regressions.
inline Sample cwm_bivariate(int n, RandomSource& rng) {
    const Eigen::Vector2d mu[3] = {{0.0, 0.0}, {4.0, 1.0}, {1.0, 5.0}};
    Eigen::Matrix2d cov[3];
    cov[0] << 1.0, 0.3, 0.3, 0.6;
    cov[1] << 0.5, -0.2, -0.2, 1.2;
    cov[2] << 0.8, 0.0, 0.0, 0.8;
    const Eigen::Vector3d beta[3] = {{1.0, 0.5, -0.3}, {-2.0, 1.0, 0.8}, {0.5, -1.0, 0.2}};
    const double sd[3] = {0.3, 0.5, 0.4};
    Sample s;
    s.x.resize(n, 2);
    s.y.resize(n);
    for (int i = 0; i < n; ++i) {
        const int g = i % 3;
        const Eigen::Matrix2d l = cov[g].llt().matrixL();
        const Eigen::Vector2d z(rng.normal(), rng.normal());
        const Eigen::Vector2d x = mu[g] + l * z;
        s.x.row(i) = x.transpose();
        s.y[i] = beta[g][0] + beta[g].tail<2>().dot(x) + sd[g] * rng.normal();
        s.labels.push_back(g + 1);
    }
    return s;
}

// Three components with diagonal covariances of unequal size and shape.
inline Sample diagonal_cwm_three(int n, RandomSource& rng) {
    const Eigen::Vector2d mu[3] = {{0.0, 0.0}, {8.0, 0.0}, {0.0, 8.0}};
    const Eigen::Vector2d sd[3] = {{1.0, 0.5}, {0.6, 1.2}, {0.8, 0.8}};
    const Eigen::Vector3d beta[3] = {{0.0, 1.0, 0.0}, {3.0, -0.5, 0.0}, {-2.0, 0.0, 1.0}};
    Sample s;
    s.x.resize(n, 2);
    s.y.resize(n);
    for (int i = 0; i < n; ++i) {
        const int g = i % 3;
        const Eigen::Vector2d x(mu[g][0] + sd[g][0] * rng.normal(), mu[g][1] + sd[g][1] * rng.normal());
        s.x.row(i) = x.transpose();
        s.y[i] = beta[g][0] + beta[g].tail<2>().dot(x) + 0.3 * rng.normal();
        s.labels.push_back(g + 1);
    }
    return s;
}

// Seven features, eight imbalanced classes: 143, 77, 52, 35, 20, 5, 2, 2.
inline Sample protein_like(RandomSource& rng) {
    const int sizes[8] = {143, 77, 52, 35, 20, 5, 2, 2};
    const int d = 7;
    Eigen::MatrixXd centers(8, d);
    for (int c = 0; c < 8; ++c) {
        for (int j = 0; j < d; ++j) {
            centers(c, j) = 2.0 * rng.normal();
        }
    }
    const int n = std::accumulate(std::begin(sizes), std::end(sizes), 0);
    Sample s;
    s.x.resize(n, d);
    s.y = Eigen::VectorXd::Zero(n);
    int row = 0;
    for (int c = 0; c < 8; ++c) {
        for (int k = 0; k < sizes[c]; ++k, ++row) {
            for (int j = 0; j < d; ++j) {
                s.x(row, j) = centers(c, j) + 0.6 * rng.normal();
            }
            s.labels.push_back(c + 1);
        }
    }
    return s;
}

inline std::vector<int> random_partition(int n, int k, RandomSource& rng) {
    std::vector<int> out(static_cast<std::size_t>(n));
    for (auto& v : out) {
        v = static_cast<int>(rng.index(static_cast<std::size_t>(k))) + 1;
    }
    return out;
}

inline Eigen::MatrixXd random_spd(int d, RandomSource& rng, double jitter = 0.1) {
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            a(i, j) = rng.normal();
        }
    }
    return a * a.transpose() + jitter * Eigen::MatrixXd::Identity(d, d);
}

} // namespace cwmtsne::fixtures
