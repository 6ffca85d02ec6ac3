#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "cwmtsne/covariance.hpp"
#include "cwmtsne/data.hpp"
#include "cwmtsne/random.hpp"

namespace cwmtsne::cwm {

/// Linear Gaussian cluster-weighted model:
///   p(x, y) = sum_g pi_g N(x; mu_g, Sigma_g) N(y; beta_g0 + beta_g^T x, sigma_g^2)
struct CwmParams {
    Eigen::VectorXd weights;                   // pi, length G
    Eigen::MatrixXd means;                     // G x d
    std::vector<Eigen::MatrixXd> covariances;  // G of d x d
    Eigen::MatrixXd reg_coeffs;                // G x (d + 1), intercept first
    Eigen::VectorXd output_vars;               // sigma^2, length G
    cov::CovModel cov_model = cov::CovModel::VVV;

    Eigen::Index components() const noexcept { return weights.size(); }
    Eigen::Index dim() const noexcept { return means.cols(); }

    /// Shapes, simplex weights, positive variances. Throws ConfigError.
    void validate() const;
};

double log_input_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);
double input_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);

/// `coeffs` is (intercept, slopes...).
double log_output_density(double y, const Eigen::VectorXd& x, const Eigen::VectorXd& coeffs, double var);
double output_density(double y, const Eigen::VectorXd& x, const Eigen::VectorXd& coeffs, double var);

struct EStepResult {
    Eigen::MatrixXd responsibilities;  // N x G, rows sum to 1
    Eigen::MatrixXd log_joint;         // l_ig = log pi_g + log p_g(x_i) + log p_g(y_i | x_i)
    double loglik = 0.0;
};

EStepResult e_step(const LabeledDataset& data, const CwmParams& params);

struct MStepResult {
    CwmParams params;
    bool regularized = false;
};

/// Closed-form updates for weights, means and regressions; constrained
/// covariance update via cov::mstep_covariances. `previous` warm-starts the
/// iterative covariance models. Throws EmptyComponentError when a column mass
/// falls below 1e-6 N.
MStepResult m_step(const LabeledDataset& data, const Eigen::MatrixXd& responsibilities, cov::CovModel model,
                   const CwmParams* previous = nullptr);

enum class InitStrategy { random, kmeans_like };

std::string_view to_string(InitStrategy s);
InitStrategy parse_init_strategy(std::string_view s);

/// Uniform weights, identity covariances, output variance var(y), and slopes
/// from the pooled least-squares fit jittered by 10% per coefficient. Means are
/// G distinct data rows (random) or a 10-iteration k-means from them.
CwmParams initialize(const LabeledDataset& data, int components, InitStrategy strategy, RandomSource& rng,
                     cov::CovModel model = cov::CovModel::VVV);

struct FitConfig {
    int components = 2;
    cov::CovModel model = cov::CovModel::VVV;
    InitStrategy init = InitStrategy::random;
    int n_starts = 5;
    int max_iter = 500;
    double tol = 1e-8;
    int max_reseeds = 3;
};

struct FitResult {
    CwmParams params;
    /// Observed-data log-likelihood after each E-step.
    std::vector<double> loglik_trace;
    /// Trace indices at which an empty component was re-seeded; the likelihood
    /// is only monotone between these points.
    std::vector<std::size_t> reseed_points;
    Eigen::MatrixXd responsibilities;
    std::vector<int> hard_labels;  // 1-based
    /// sum_i l_{i, hard_label(i)}: complete-data log-likelihood at the MAP assignment.
    double complete_loglik = 0.0;
    bool converged = false;
    int n_iterations = 0;
    bool regularized = false;
    int start_index = 0;
    cov::CovModel requested_model = cov::CovModel::VVV;
    std::vector<std::string> warnings;

    double loglik() const { return loglik_trace.empty() ? 0.0 : loglik_trace.back(); }
};

/// Best of n_starts EM runs by final log-likelihood. Start s draws from
/// rng.child(s). Throws DegeneracyError if every start fails.
FitResult fit(const LabeledDataset& data, const FitConfig& config, const RandomSource& rng);

/// Row-wise argmax, 1-based, ties to the lowest component.
std::vector<int> argmax_labels(const Eigen::MatrixXd& scores);

std::vector<int> predict_cluster(const CwmParams& params, const LabeledDataset& data);

} // namespace cwmtsne::cwm
