#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace cwmtsne::cov {

/// Parsimonious covariance models Sigma_g = lambda_g D_g A_g D_g^T. The three
/// letters constrain volume, shape and orientation: E(qual), V(ariable), I(dentity).
enum class CovModel { EII, VII, EEI, VEI, EVI, VVI, EEE, VEE, EVE, EEV, VVE, VEV, EVV, VVV };

inline constexpr std::array<CovModel, 14> kAllModels = {
    CovModel::EII, CovModel::VII, CovModel::EEI, CovModel::VEI, CovModel::EVI, CovModel::VVI, CovModel::EEE,
    CovModel::VEE, CovModel::EVE, CovModel::EEV, CovModel::VVE, CovModel::VEV, CovModel::EVV, CovModel::VVV};

std::string_view to_string(CovModel model);
/// Throws ConfigError on an unknown code.
CovModel parse_model(std::string_view code);
/// Accepts "all" or a comma-separated list of codes.
std::vector<CovModel> parse_model_list(std::string_view list);

/// Position of `model` in kAllModels.
std::size_t model_index(CovModel model);

/// At d = 1 shape and orientation are vacuous; every code collapses to EII or
/// VII according to its volume letter.
CovModel effective_model(CovModel model, Eigen::Index d);

struct EigenDecomposition {
    double volume = 1.0;              // lambda = det(Sigma)^(1/d)
    Eigen::MatrixXd orientation;      // D, orthogonal, columns are eigenvectors
    Eigen::VectorXd shape;            // diag(A), descending, product 1
};

/// Eigenvalues sorted descending; each eigenvector's largest-magnitude entry is
/// made positive (ties to the lowest index). Diagonal inputs map to permutation
/// matrices, so isotropic matrices give D = I. Throws DataError if not SPD.
EigenDecomposition decompose(const Eigen::MatrixXd& sigma);

Eigen::MatrixXd compose(const EigenDecomposition& decomposition);

/// Free parameters in the G covariance matrices of a d-dimensional model.
long long param_count(CovModel model, long long d, long long G);

/// Weighted scatter W_g = sum_i r_ig (x_i - mu_g)(x_i - mu_g)^T and masses n_g = sum_i r_ig.
struct ScatterInput {
    std::vector<Eigen::MatrixXd> scatters;
    Eigen::VectorXd masses;

    Eigen::Index dim() const { return scatters.empty() ? 0 : scatters.front().rows(); }
    std::size_t components() const { return scatters.size(); }
};

struct CovarianceEstimate {
    std::vector<Eigen::MatrixXd> covariances;
    bool regularized = false;
    int inner_iterations = 0;
};

struct MStepOptions {
    double inner_tol = 1e-8;
    int max_inner = 200;
};

/// Maximizes sum_g -1/2 [n_g log|Sigma_g| + tr(W_g Sigma_g^-1)] subject to the
/// model's constraints. Iterative models (VEI, VEE, EVE, VVE, VEV) alternate
/// closed-form block updates; when `warm_start` holds covariances of the same
/// model, the better of the warm and cold runs is returned, so the objective
/// never falls below the warm start's value. Throws DegeneracyError naming the
/// component when a scatter is singular beyond regularization.
CovarianceEstimate mstep_covariances(CovModel model, const ScatterInput& scatter,
                                     const std::vector<Eigen::MatrixXd>* warm_start = nullptr,
                                     const MStepOptions& options = {});

/// Gaussian Q-function contribution of the covariances:
/// -1/2 sum_g [n_g (d log 2pi + log|Sigma_g|) + tr(Sigma_g^-1 W_g)].
double gaussian_q(const std::vector<Eigen::MatrixXd>& covariances, const ScatterInput& scatter);

} // namespace cwmtsne::cov
