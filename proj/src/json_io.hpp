#pragma once

#include <optional>

#include <Eigen/Core>

#include "cwmtsne/cwm.hpp"
#include "cwmtsne/selection.hpp"
#include "json.hpp"

namespace cwmtsne::detail {

using Json = nlohmann::ordered_json;

inline Json to_json(const std::optional<double>& v) {
    return v ? Json(*v) : Json(nullptr);
}

inline Json to_json(const Eigen::VectorXd& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v[i]);
    }
    return out;
}

inline Json to_json(const Eigen::MatrixXd& m) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        out.push_back(std::move(row));
    }
    return out;
}

inline Json criteria_to_json(const selection::CriteriaSet& cs) {
    Json out = Json::object();
    for (auto c : selection::kAllCriteria) {
        out[std::string(selection::to_string(c))] = to_json(cs.get(c));
    }
    return out;
}

inline Json params_to_json(const cwm::CwmParams& p) {
    Json out;
    out["components"] = p.components();
    out["cov_model"] = std::string(cov::to_string(p.cov_model));
    out["weights"] = to_json(p.weights);
    out["means"] = to_json(p.means);
    Json covs = Json::array();
    for (const auto& c : p.covariances) {
        covs.push_back(to_json(c));
    }
    out["covariances"] = std::move(covs);
    out["reg_coeffs"] = to_json(p.reg_coeffs);
    out["output_vars"] = to_json(p.output_vars);
    return out;
}

inline Json fit_to_json(const cwm::FitResult& fit) {
    Json out;
    out["requested_model"] = std::string(cov::to_string(fit.requested_model));
    out["loglik"] = fit.loglik();
    out["complete_loglik"] = fit.complete_loglik;
    out["converged"] = fit.converged;
    out["iterations"] = fit.n_iterations;
    out["regularized"] = fit.regularized;
    out["start"] = fit.start_index + 1;
    out["n_params"] = selection::count_parameters(fit);
    out["criteria"] = criteria_to_json(selection::information_criteria(fit));
    out["params"] = params_to_json(fit.params);
    out["loglik_trace"] = fit.loglik_trace;
    out["reseed_points"] = fit.reseed_points;
    out["warnings"] = fit.warnings;
    return out;
}

} // namespace cwmtsne::detail
