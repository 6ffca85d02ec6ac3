#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cwmtsne/cwm.hpp"
#include "cwmtsne/metrics.hpp"
#include "cwmtsne/selection.hpp"

namespace cwmtsne::report {

/// Status string for sweep cells that failed to fit.
inline constexpr const char* kNotEstimated = "Not Estimated";

/// Round-trip decimal rendering (17 significant digits); empty for absent values.
std::string format_number(double v);
std::string format_number(const std::optional<double>& v);

/// row,hard_label,r_1..r_G
std::string assignments_csv(const cwm::FitResult& fit);

/// iteration,cost
std::string cost_trace_csv(std::span<const double> trace);

/// row,y_1..y_m
std::string embedding_csv(const Eigen::MatrixXd& y);

/// G,model,status,loglik,n_params,<criteria...>,reason
std::string sweep_csv(const selection::SweepResult& sweep);

/// Human-readable best model per criterion.
std::string sweep_summary(const selection::SweepResult& sweep);

struct CellMetrics {
    int components = 0;
    cov::CovModel model = cov::CovModel::VVV;
    metrics::AgreementIndices indices;
    double accuracy = 0.0;
};

/// G,model,rand,HA,MA,FM,Jaccard,accuracy
std::string metrics_csv(std::span<const CellMetrics> rows);

/// Structured fit report: parameters, trace, criteria, warnings (JSON text).
std::string fit_json(const cwm::FitResult& fit, int indent = 2);

} // namespace cwmtsne::report
