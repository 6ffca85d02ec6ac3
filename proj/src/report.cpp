#include "cwmtsne/report.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "json_io.hpp"

namespace cwmtsne::report {

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_number(const std::optional<double>& v) {
    return v ? format_number(*v) : std::string{};
}

std::string assignments_csv(const cwm::FitResult& fit) {
    std::ostringstream os;
    const auto G = fit.responsibilities.cols();
    os << "row,hard_label";
    for (Eigen::Index g = 0; g < G; ++g) {
        os << ",r_" << (g + 1);
    }
    os << '\n';
    for (Eigen::Index i = 0; i < fit.responsibilities.rows(); ++i) {
        os << (i + 1) << ',' << fit.hard_labels[static_cast<std::size_t>(i)];
        for (Eigen::Index g = 0; g < G; ++g) {
            os << ',' << format_number(fit.responsibilities(i, g));
        }
        os << '\n';
    }
    return os.str();
}

std::string cost_trace_csv(std::span<const double> trace) {
    std::ostringstream os;
    os << "iteration,cost\n";
    for (std::size_t t = 0; t < trace.size(); ++t) {
        os << (t + 1) << ',' << format_number(trace[t]) << '\n';
    }
    return os.str();
}

std::string embedding_csv(const Eigen::MatrixXd& y) {
    std::ostringstream os;
    os << "row";
    for (Eigen::Index k = 0; k < y.cols(); ++k) {
        os << ",y_" << (k + 1);
    }
    os << '\n';
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        os << (i + 1);
        for (Eigen::Index k = 0; k < y.cols(); ++k) {
            os << ',' << format_number(y(i, k));
        }
        os << '\n';
    }
    return os.str();
}

std::string sweep_csv(const selection::SweepResult& sweep) {
    std::ostringstream os;
    os << "G,model,status,loglik,n_params";
    for (auto c : selection::kAllCriteria) {
        os << ',' << selection::to_string(c);
    }
    os << ",reason\n";
    for (const auto& cell : sweep.cells) {
        os << cell.components << ',' << cov::to_string(cell.model) << ',';
        if (cell.estimated) {
            os << "estimated," << format_number(cell.criteria->loglik) << ',' << cell.criteria->n_params;
            for (auto c : selection::kAllCriteria) {
                os << ',' << format_number(cell.criteria->get(c));
            }
            os << ",\n";
        } else {
            os << kNotEstimated << ",,";
            for (std::size_t k = 0; k < selection::kAllCriteria.size(); ++k) {
                os << ',';
            }
            std::string reason = cell.failure_reason;
            for (auto& ch : reason) {
                if (ch == '"') {
                    ch = '\'';
                }
            }
            os << ",\"" << reason << "\"\n";
        }
    }
    return os.str();
}

std::string sweep_summary(const selection::SweepResult& sweep) {
    std::ostringstream os;
    std::size_t estimated = 0;
    for (const auto& cell : sweep.cells) {
        estimated += cell.estimated ? 1u : 0u;
    }
    os << "cells: " << sweep.cells.size() << " attempted, " << estimated << " estimated, "
       << (sweep.cells.size() - estimated) << " not estimated\n";
    for (const auto& [criterion, index] : sweep.best) {
        const auto& cell = sweep.cells[index];
        os << "best by " << selection::to_string(criterion) << ": G=" << cell.components << ' '
           << cov::to_string(cell.model) << " (" << format_number(*cell.criteria->get(criterion)) << ")\n";
    }
    return os.str();
}

std::string metrics_csv(std::span<const CellMetrics> rows) {
    std::ostringstream os;
    os << "G,model,rand,HA,MA,FM,Jaccard,accuracy\n";
    for (const auto& r : rows) {
        os << r.components << ',' << cov::to_string(r.model) << ',' << format_number(r.indices.rand) << ','
           << format_number(r.indices.hubert_arabie) << ',' << format_number(r.indices.morey_agresti) << ','
           << format_number(r.indices.fowlkes_mallows) << ',' << format_number(r.indices.jaccard) << ','
           << format_number(r.accuracy) << '\n';
    }
    return os.str();
}

std::string fit_json(const cwm::FitResult& fit, int indent) {
    return detail::fit_to_json(fit).dump(indent);
}

} // namespace cwmtsne::report
