#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "cwmtsne/data.hpp"

namespace cwmtsne::tsne {

/// Affinities below this value are raised to it before any log or division.
inline constexpr double kAffinityFloor = 1e-12;

enum class AffinityKind { conditional, joint };

/// Conditional kind: rows sum to 1. Joint kind: symmetric, total sum 1.
/// Diagonal is zero in both.
struct AffinityMatrix {
    Eigen::MatrixXd values;
    AffinityKind kind = AffinityKind::joint;
};

struct CalibratedAffinities {
    AffinityMatrix affinities;          // conditional
    Eigen::VectorXd precisions;         // beta_i = 1 / (2 sigma_i^2)
    Eigen::VectorXd entropies_bits;     // achieved Shannon entropy per row
};

struct LowDimAffinities {
    AffinityMatrix q;                   // joint, floored
    Eigen::MatrixXd kernel;             // (1 + |y_i - y_j|^2)^-1, zero diagonal
};

/// Piecewise-constant momentum: `initial` before `switch_iteration`, `final` after.
struct MomentumSchedule {
    double initial = 0.5;
    double final = 0.8;
    int switch_iteration = 250;

    double at(int iteration) const noexcept { return iteration < switch_iteration ? initial : final; }
};

struct TsneConfig {
    double perplexity = 30.0;
    int max_iterations = 1000;
    int output_dim = 2;
    /// Only 0 (exact gradient) is supported.
    double theta = 0.0;
    double learning_rate = 200.0;
    MomentumSchedule momentum;
    double early_exaggeration_factor = 12.0;
    /// Defaults to min(250, max_iterations / 4). Zero disables exaggeration.
    std::optional<int> early_exaggeration_iters;
    /// Initial map drawn from N(0, init_sd^2 I).
    double init_sd = 1e-2;
    std::uint64_t seed = 0;
    double calibration_tol = 1e-4;
    int max_bisection = 64;

    int exaggeration_iterations() const;
    /// Throws ConfigError. `n_points` is checked against the perplexity.
    void validate(Eigen::Index n_points) const;
};

struct EmbeddingState {
    Eigen::MatrixXd Y;
    Eigen::MatrixXd Y_prev;
    int iteration = 0;
    /// KL(P || Q) of the unexaggerated P after each update.
    std::vector<double> cost_trace;
    /// KL at the random initial map, before the first update.
    double initial_cost = 0.0;
    double learning_rate = 200.0;
    MomentumSchedule momentum;
    int exaggeration_iters = 0;

    double final_cost() const { return cost_trace.empty() ? initial_cost : cost_trace.back(); }
};

/// Optional streaming hooks for embed().
struct EmbedObserver {
    std::function<void(int iteration, double cost)> on_cost;
    int snapshot_every = 0;
    std::function<void(int iteration, const Eigen::MatrixXd& Y)> on_snapshot;
};

Eigen::MatrixXd pairwise_sq_distances(const Eigen::MatrixXd& x);

/// Per-row bandwidth calibration so that each row's entropy is log2(perplexity).
/// Bracket doubling on beta followed by bisection. Throws DegeneracyError on a
/// row whose off-diagonal distances are all zero.
CalibratedAffinities conditional_affinities(const Eigen::MatrixXd& sq_distances, double perplexity,
                                            double tol = 1e-4, int max_bisection = 64);

/// p_ij = (p_j|i + p_i|j) / 2N, floored at kAffinityFloor and renormalized.
AffinityMatrix symmetrize(const AffinityMatrix& conditional);

/// Student-t (one degree of freedom) joint affinities of the map.
LowDimAffinities low_dim_affinities(const Eigen::MatrixXd& y);

/// KL(P || Q) over off-diagonal entries, with 0 log 0 = 0.
double kl_cost(const AffinityMatrix& p, const AffinityMatrix& q);

/// dC/dy_i = 4 sum_j (p_ij - q_ij) (y_i - y_j) (1 + |y_i - y_j|^2)^-1
Eigen::MatrixXd tsne_gradient(const AffinityMatrix& p, const AffinityMatrix& q, const Eigen::MatrixXd& kernel,
                              const Eigen::MatrixXd& y);

/// Exact t-SNE with momentum gradient descent.
EmbeddingState embed(const DataMatrix& x, const TsneConfig& cfg, const EmbedObserver& observer = {});

} // namespace cwmtsne::tsne
