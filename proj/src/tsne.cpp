#include "cwmtsne/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cwmtsne/error.hpp"

namespace cwmtsne::tsne {

int TsneConfig::exaggeration_iterations() const {
    if (early_exaggeration_iters) {
        return *early_exaggeration_iters;
    }
    return std::min(250, max_iterations / 4);
}

void TsneConfig::validate(Eigen::Index n_points) const {
    if (theta != 0.0) {
        throw ConfigError("theta = " + std::to_string(theta) +
                          " requested, but only the exact gradient (theta = 0) is implemented");
    }
    if (!(perplexity > 1.0)) {
        throw ConfigError("perplexity must exceed 1");
    }
    if (n_points > 0 && !(perplexity < static_cast<double>(n_points))) {
        throw ConfigError("perplexity " + std::to_string(perplexity) + " must be smaller than N = " +
                          std::to_string(n_points));
    }
    if (max_iterations < 1) {
        throw ConfigError("max_iterations must be positive");
    }
    if (output_dim < 1) {
        throw ConfigError("output dimension must be positive");
    }
    if (!(learning_rate > 0.0)) {
        throw ConfigError("learning rate must be positive");
    }
    if (!(early_exaggeration_factor >= 1.0)) {
        throw ConfigError("early exaggeration factor must be >= 1");
    }
    if (early_exaggeration_iters && *early_exaggeration_iters < 0) {
        throw ConfigError("early exaggeration iterations must be non-negative");
    }
    if (!(init_sd > 0.0)) {
        throw ConfigError("init_sd must be positive");
    }
    if (!(calibration_tol > 0.0) || max_bisection < 1) {
        throw ConfigError("invalid perplexity calibration settings");
    }
}

Eigen::MatrixXd pairwise_sq_distances(const Eigen::MatrixXd& x) {
    const auto n = x.rows();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = (x.row(i) - x.row(j)).squaredNorm();
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

namespace {

// Fills `row` with exp(-beta (D_ij - min_j D_ij)) normalized, returns entropy in nats.
double row_distribution(const Eigen::MatrixXd& dist, Eigen::Index i, double beta, double min_dist,
                        Eigen::Ref<Eigen::RowVectorXd> row) {
    const auto n = dist.cols();
    double sum = 0.0;
    double weighted = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) {
            row[j] = 0.0;
            continue;
        }
        const double shifted = dist(i, j) - min_dist;
        const double w = std::exp(-beta * shifted);
        row[j] = w;
        sum += w;
        weighted += w * shifted;
    }
    row /= sum;
    return std::log(sum) + beta * weighted / sum;
}

} // namespace

CalibratedAffinities conditional_affinities(const Eigen::MatrixXd& sq_distances, double perplexity, double tol,
                                            int max_bisection) {
    const auto n = sq_distances.rows();
    if (sq_distances.cols() != n || n < 2) {
        throw ConfigError("distance matrix must be square with at least two points");
    }
    if (!(perplexity > 1.0) || !(perplexity < static_cast<double>(n))) {
        throw ConfigError("perplexity must satisfy 1 < perplexity < N");
    }
    const double target = std::log2(perplexity);
    const double ln2 = std::log(2.0);

    CalibratedAffinities out;
    out.affinities.kind = AffinityKind::conditional;
    out.affinities.values = Eigen::MatrixXd::Zero(n, n);
    out.precisions.resize(n);
    out.entropies_bits.resize(n);

    Eigen::RowVectorXd row(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double min_dist = std::numeric_limits<double>::infinity();
        double max_dist = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j != i) {
                min_dist = std::min(min_dist, sq_distances(i, j));
                max_dist = std::max(max_dist, sq_distances(i, j));
            }
        }
        if (!(max_dist > 0.0)) {
            throw DegeneracyError("row " + std::to_string(i + 1) +
                                  " has zero distance to every other point (duplicate points)");
        }

        double beta = 1.0 / max_dist;
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        double best_beta = beta;
        double best_gap = std::numeric_limits<double>::infinity();
        double entropy = 0.0;
        for (int it = 0; it < max_bisection; ++it) {
            entropy = row_distribution(sq_distances, i, beta, min_dist, row) / ln2;
            const double gap = entropy - target;
            if (std::abs(gap) < best_gap) {
                best_gap = std::abs(gap);
                best_beta = beta;
            }
            if (std::abs(gap) <= tol) {
                break;
            }
            // Entropy decreases as beta grows.
            if (gap > 0.0) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (lo + hi);
            } else {
                hi = beta;
                beta = 0.5 * (lo + hi);
            }
        }
        entropy = row_distribution(sq_distances, i, best_beta, min_dist, row) / ln2;
        out.affinities.values.row(i) = row;
        out.precisions[i] = best_beta;
        out.entropies_bits[i] = entropy;
    }
    return out;
}

AffinityMatrix symmetrize(const AffinityMatrix& conditional) {
    if (conditional.kind != AffinityKind::conditional) {
        throw ConfigError("symmetrize expects conditional affinities");
    }
    const auto& c = conditional.values;
    const auto n = c.rows();
    const double denom = 2.0 * static_cast<double>(n);
    AffinityMatrix out;
    out.kind = AffinityKind::joint;
    out.values = Eigen::MatrixXd::Zero(n, n);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = std::max((c(i, j) + c(j, i)) / denom, kAffinityFloor);
            out.values(i, j) = v;
            out.values(j, i) = v;
            total += 2.0 * v;
        }
    }
    out.values /= total;
    return out;
}

LowDimAffinities low_dim_affinities(const Eigen::MatrixXd& y) {
    const auto n = y.rows();
    LowDimAffinities out;
    out.kernel = Eigen::MatrixXd::Zero(n, n);
    double z = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double k = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
            out.kernel(i, j) = k;
            out.kernel(j, i) = k;
            z += 2.0 * k;
        }
    }
    out.q.kind = AffinityKind::joint;
    out.q.values = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i != j) {
                out.q.values(i, j) = std::max(out.kernel(i, j) / z, kAffinityFloor);
            }
        }
    }
    return out;
}

double kl_cost(const AffinityMatrix& p, const AffinityMatrix& q) {
    const auto& pv = p.values;
    const auto& qv = q.values;
    if (pv.rows() != qv.rows() || pv.cols() != qv.cols()) {
        throw ConfigError("kl_cost: shape mismatch");
    }
    double c = 0.0;
    for (Eigen::Index j = 0; j < pv.cols(); ++j) {
        for (Eigen::Index i = 0; i < pv.rows(); ++i) {
            if (i == j) {
                continue;
            }
            const double pij = pv(i, j);
            if (pij > 0.0) {
                c += pij * std::log(pij / std::max(qv(i, j), kAffinityFloor));
            }
        }
    }
    return c;
}

Eigen::MatrixXd tsne_gradient(const AffinityMatrix& p, const AffinityMatrix& q, const Eigen::MatrixXd& kernel,
                              const Eigen::MatrixXd& y) {
    const auto n = y.rows();
    Eigen::MatrixXd w = (p.values - q.values).cwiseProduct(kernel);
    w.diagonal().setZero();
    Eigen::MatrixXd grad(n, y.cols());
    const Eigen::VectorXd row_sums = w.rowwise().sum();
    grad = 4.0 * (row_sums.asDiagonal() * y - w * y);
    return grad;
}

EmbeddingState embed(const DataMatrix& x, const TsneConfig& cfg, const EmbedObserver& observer) {
    const auto n = x.n_rows();
    if (n < 4) {
        throw DataError("t-SNE needs at least 4 points");
    }
    cfg.validate(n);

    const Eigen::MatrixXd dist = pairwise_sq_distances(x.values());
    const AffinityMatrix p =
        symmetrize(conditional_affinities(dist, cfg.perplexity, cfg.calibration_tol, cfg.max_bisection).affinities);
    const int exaggeration_iters = cfg.exaggeration_iterations();
    AffinityMatrix p_exaggerated = p;
    p_exaggerated.values *= cfg.early_exaggeration_factor;

    RandomSource rng(cfg.seed);
    EmbeddingState state;
    state.learning_rate = cfg.learning_rate;
    state.momentum = cfg.momentum;
    state.exaggeration_iters = exaggeration_iters;
    state.Y.resize(n, cfg.output_dim);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < cfg.output_dim; ++k) {
            state.Y(i, k) = rng.normal(0.0, cfg.init_sd);
        }
    }
    state.Y_prev = state.Y;
    state.cost_trace.reserve(static_cast<std::size_t>(cfg.max_iterations));

    LowDimAffinities low = low_dim_affinities(state.Y);
    state.initial_cost = kl_cost(p, low.q);

    for (int t = 0; t < cfg.max_iterations; ++t) {
        const AffinityMatrix& p_t = t < exaggeration_iters ? p_exaggerated : p;
        const Eigen::MatrixXd grad = tsne_gradient(p_t, low.q, low.kernel, state.Y);
        Eigen::MatrixXd next = state.Y - cfg.learning_rate * grad + cfg.momentum.at(t) * (state.Y - state.Y_prev);
        if (!next.allFinite()) {
            throw DegeneracyError("non-finite embedding at iteration " + std::to_string(t + 1));
        }
        state.Y_prev = std::move(state.Y);
        state.Y = std::move(next);
        state.iteration = t + 1;

        low = low_dim_affinities(state.Y);
        const double cost = kl_cost(p, low.q);
        state.cost_trace.push_back(cost);
        if (observer.on_cost) {
            observer.on_cost(state.iteration, cost);
        }
        if (observer.on_snapshot && observer.snapshot_every > 0 && state.iteration % observer.snapshot_every == 0) {
            observer.on_snapshot(state.iteration, state.Y);
        }
    }
    return state;
}

} // namespace cwmtsne::tsne
