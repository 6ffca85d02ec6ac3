#include "cwmtsne/cwm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "cwmtsne/error.hpp"

namespace cwmtsne::cwm {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

const double kLog2Pi = std::log(2.0 * M_PI);
constexpr double kEmptyFraction = 1e-6;
constexpr double kOutputVarFloor = 1e-10;
constexpr double kNormalRidge = 1e-10;
constexpr int kKmeansIterations = 10;

Mat design_matrix(const Mat& x) {
    Mat xt(x.rows(), x.cols() + 1);
    xt.col(0).setOnes();
    xt.rightCols(x.cols()) = x;
    return xt;
}

const Vec& require_response(const LabeledDataset& data) {
    if (data.response.size() != data.size()) {
        throw DataError("dataset has no response of length N; derive one from the labels first");
    }
    return data.response;
}

// Population variance; 1 for a constant response so that scales stay positive.
double response_scale(const Vec& y) {
    const double v = (y.array() - y.mean()).square().mean();
    return v > 0.0 ? v : 1.0;
}

double logsumexp(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    const double m = row.maxCoeff();
    if (!std::isfinite(m)) {
        return m;
    }
    return m + std::log((row.array() - m).exp().sum());
}

struct WeightedFit {
    Vec coeffs;
    bool ridged = false;
};

WeightedFit weighted_least_squares(const Mat& xt, const Vec& y, const Vec& w) {
    Mat a = xt.transpose() * w.asDiagonal() * xt;
    Vec b = xt.transpose() * (w.array() * y.array()).matrix();
    WeightedFit out;
    Eigen::LDLT<Mat> ldlt(a);
    bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-14;
    if (!ok) {
        const double scale = std::max(a.diagonal().mean(), 1.0);
        a.diagonal().array() += kNormalRidge * scale;
        ldlt.compute(a);
        out.ridged = true;
    }
    out.coeffs = ldlt.solve(b);
    return out;
}

Vec pooled_ols(const LabeledDataset& data) {
    const Mat xt = design_matrix(data.features.values());
    return xt.colPivHouseholderQr().solve(require_response(data));
}

} // namespace

void CwmParams::validate() const {
    const auto G = components();
    const auto d = dim();
    if (G < 1 || means.rows() != G || static_cast<Eigen::Index>(covariances.size()) != G ||
        reg_coeffs.rows() != G || reg_coeffs.cols() != d + 1 || output_vars.size() != G) {
        throw ConfigError("CwmParams: inconsistent component shapes");
    }
    if (std::abs(weights.sum() - 1.0) > 1e-12 || !(weights.minCoeff() > 0.0)) {
        throw ConfigError("CwmParams: weights must be positive and sum to 1");
    }
    if (!(output_vars.minCoeff() > 0.0)) {
        throw ConfigError("CwmParams: output variances must be positive");
    }
    for (const auto& c : covariances) {
        if (c.rows() != d || c.cols() != d) {
            throw ConfigError("CwmParams: covariance shape mismatch");
        }
    }
}

double log_input_density(const Vec& x, const Vec& mean, const Mat& cov) {
    Eigen::LLT<Mat> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw DegeneracyError("covariance matrix is not positive definite");
    }
    const Vec z = llt.matrixL().solve(x - mean);
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + log_det + z.squaredNorm());
}

double input_density(const Vec& x, const Vec& mean, const Mat& cov) {
    return std::exp(log_input_density(x, mean, cov));
}

double log_output_density(double y, const Vec& x, const Vec& coeffs, double var) {
    if (!(var > 0.0)) {
        throw ConfigError("output variance must be positive");
    }
    const double pred = coeffs[0] + coeffs.tail(x.size()).dot(x);
    const double r = y - pred;
    return -0.5 * (kLog2Pi + std::log(var) + r * r / var);
}

double output_density(double y, const Vec& x, const Vec& coeffs, double var) {
    return std::exp(log_output_density(y, x, coeffs, var));
}

EStepResult e_step(const LabeledDataset& data, const CwmParams& params) {
    const Mat& x = data.features.values();
    const Vec& y = require_response(data);
    const auto n = x.rows();
    const auto d = x.cols();
    const auto G = params.components();
    if (params.dim() != d) {
        throw ConfigError("parameter dimension does not match the data");
    }

    EStepResult out;
    out.log_joint.resize(n, G);
    const Mat xt = design_matrix(x);
    for (Eigen::Index g = 0; g < G; ++g) {
        Eigen::LLT<Mat> llt(params.covariances[static_cast<std::size_t>(g)]);
        if (llt.info() != Eigen::Success) {
            throw DegeneracyError("component " + std::to_string(g + 1) + " covariance is not positive definite");
        }
        const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        Mat centered = (x.rowwise() - params.means.row(g)).transpose();
        llt.matrixL().solveInPlace(centered);
        const Vec maha = centered.colwise().squaredNorm().transpose();
        const double var = params.output_vars[g];
        const Vec resid = y - xt * params.reg_coeffs.row(g).transpose();
        out.log_joint.col(g) = (std::log(params.weights[g]) - 0.5 * (static_cast<double>(d) * kLog2Pi + log_det)) -
                               0.5 * maha.array() - 0.5 * (kLog2Pi + std::log(var)) -
                               0.5 * resid.array().square() / var;
    }

    out.responsibilities.resize(n, G);
    out.loglik = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double lse = logsumexp(out.log_joint.row(i));
        if (!std::isfinite(lse)) {
            throw DegeneracyError("observation " + std::to_string(i + 1) +
                                  " has zero density under every component");
        }
        out.responsibilities.row(i) = (out.log_joint.row(i).array() - lse).exp();
        out.responsibilities.row(i) /= out.responsibilities.row(i).sum();
        out.loglik += lse;
    }
    return out;
}

MStepResult m_step(const LabeledDataset& data, const Mat& resp, cov::CovModel model, const CwmParams* previous) {
    const Mat& x = data.features.values();
    const Vec& y = require_response(data);
    const auto n = x.rows();
    const auto d = x.cols();
    const auto G = resp.cols();
    if (resp.rows() != n || G < 1) {
        throw ConfigError("responsibility matrix shape does not match the data");
    }

    const Vec masses = resp.colwise().sum().transpose();
    for (Eigen::Index g = 0; g < G; ++g) {
        if (masses[g] < kEmptyFraction * static_cast<double>(n)) {
            throw EmptyComponentError(static_cast<std::size_t>(g), masses[g]);
        }
    }

    MStepResult out;
    CwmParams& p = out.params;
    p.cov_model = model;
    p.weights = masses / static_cast<double>(n);
    p.weights /= p.weights.sum();
    p.means = (resp.transpose() * x).array().colwise() / masses.array();

    cov::ScatterInput scatter;
    scatter.masses = masses;
    for (Eigen::Index g = 0; g < G; ++g) {
        const Mat centered = x.rowwise() - p.means.row(g);
        scatter.scatters.push_back(centered.transpose() * resp.col(g).asDiagonal() * centered);
    }
    const bool warm = previous != nullptr && previous->components() == G && previous->dim() == d;
    auto est = cov::mstep_covariances(model, scatter, warm ? &previous->covariances : nullptr);
    p.covariances = std::move(est.covariances);
    out.regularized = est.regularized;

    const Mat xt = design_matrix(x);
    const double var_floor = kOutputVarFloor * response_scale(y);
    p.reg_coeffs.resize(G, d + 1);
    p.output_vars.resize(G);
    for (Eigen::Index g = 0; g < G; ++g) {
        const Vec w = resp.col(g);
        auto wls = weighted_least_squares(xt, y, w);
        out.regularized = out.regularized || wls.ridged;
        p.reg_coeffs.row(g) = wls.coeffs.transpose();
        const Vec resid = y - xt * wls.coeffs;
        const double var = (w.array() * resid.array().square()).sum() / masses[g];
        p.output_vars[g] = std::max(var, var_floor);
    }
    return out;
}

std::string_view to_string(InitStrategy s) {
    return s == InitStrategy::random ? "random" : "kmeans_like";
}

InitStrategy parse_init_strategy(std::string_view s) {
    if (s == "random") {
        return InitStrategy::random;
    }
    if (s == "kmeans_like" || s == "kmeans") {
        return InitStrategy::kmeans_like;
    }
    throw ConfigError("unknown initialization strategy '" + std::string(s) + "'");
}

CwmParams initialize(const LabeledDataset& data, int components, InitStrategy strategy, RandomSource& rng,
                     cov::CovModel model) {
    const Mat& x = data.features.values();
    const Vec& y = require_response(data);
    const auto n = x.rows();
    const auto d = x.cols();
    if (components < 1) {
        throw ConfigError("number of components must be positive");
    }
    if (components > n) {
        throw ConfigError("cannot initialize " + std::to_string(components) + " components from " +
                          std::to_string(n) + " observations");
    }
    const auto G = static_cast<Eigen::Index>(components);

    CwmParams p;
    p.cov_model = model;
    p.weights = Vec::Constant(G, 1.0 / static_cast<double>(G));
    p.means.resize(G, d);
    const auto rows = rng.sample_without_replacement(static_cast<std::size_t>(n), static_cast<std::size_t>(G));
    for (Eigen::Index g = 0; g < G; ++g) {
        p.means.row(g) = x.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(g)]));
    }

    if (strategy == InitStrategy::kmeans_like) {
        std::vector<Eigen::Index> assign(static_cast<std::size_t>(n), 0);
        for (int it = 0; it < kKmeansIterations; ++it) {
            for (Eigen::Index i = 0; i < n; ++i) {
                Eigen::Index best = 0;
                double best_d = std::numeric_limits<double>::infinity();
                for (Eigen::Index g = 0; g < G; ++g) {
                    const double dist = (x.row(i) - p.means.row(g)).squaredNorm();
                    if (dist < best_d) {
                        best_d = dist;
                        best = g;
                    }
                }
                assign[static_cast<std::size_t>(i)] = best;
            }
            Mat sums = Mat::Zero(G, d);
            Vec counts = Vec::Zero(G);
            for (Eigen::Index i = 0; i < n; ++i) {
                sums.row(assign[static_cast<std::size_t>(i)]) += x.row(i);
                counts[assign[static_cast<std::size_t>(i)]] += 1.0;
            }
            for (Eigen::Index g = 0; g < G; ++g) {
                if (counts[g] > 0.0) {
                    p.means.row(g) = sums.row(g) / counts[g];
                }
            }
        }
    }

    p.covariances.assign(static_cast<std::size_t>(G), Mat::Identity(d, d));
    const Vec beta = pooled_ols(data);
    p.reg_coeffs.resize(G, d + 1);
    for (Eigen::Index g = 0; g < G; ++g) {
        for (Eigen::Index k = 0; k <= d; ++k) {
            p.reg_coeffs(g, k) = beta[k] + rng.normal(0.0, 0.1 * std::abs(beta[k]));
        }
    }
    p.output_vars = Vec::Constant(G, response_scale(y));
    return p;
}

std::vector<int> argmax_labels(const Mat& scores) {
    std::vector<int> labels(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index g = 1; g < scores.cols(); ++g) {
            if (scores(i, g) > scores(i, best)) {
                best = g;
            }
        }
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best) + 1;
    }
    return labels;
}

std::vector<int> predict_cluster(const CwmParams& params, const LabeledDataset& data) {
    return argmax_labels(e_step(data, params).log_joint);
}

namespace {

struct StartOutcome {
    std::optional<FitResult> result;
    std::string failure;
};

void reseed(CwmParams& params, const Mat& resp, const Mat& x, const Vec& y, Eigen::Index component) {
    const Vec row_max = resp.rowwise().maxCoeff();
    Eigen::Index worst = 0;
    row_max.minCoeff(&worst);
    const auto d = x.cols();
    params.means.row(component) = x.row(worst);
    params.covariances[static_cast<std::size_t>(component)] = Mat::Identity(d, d);
    params.output_vars[component] = response_scale(y);
    params.weights[component] = std::max(params.weights[component], 1.0 / static_cast<double>(params.components()));
    params.weights /= params.weights.sum();
}

StartOutcome run_start(const LabeledDataset& data, const FitConfig& cfg, RandomSource rng, int start) {
    StartOutcome outcome;
    const cov::CovModel model = cov::effective_model(cfg.model, data.dim());
    try {
        CwmParams params = initialize(data, cfg.components, cfg.init, rng, model);
        FitResult r;
        r.start_index = start;
        r.requested_model = cfg.model;
        std::size_t segment_start = 0;
        int reseeds = 0;
        EStepResult es;
        for (;;) {
            es = e_step(data, params);
            if (!std::isfinite(es.loglik)) {
                throw DegeneracyError("log-likelihood is not finite");
            }
            r.loglik_trace.push_back(es.loglik);
            const std::size_t t = r.loglik_trace.size() - 1;
            if (t > segment_start) {
                const double prev = r.loglik_trace[t - 1];
                if (std::abs(es.loglik - prev) / (1.0 + std::abs(es.loglik)) < cfg.tol) {
                    r.converged = true;
                    break;
                }
            }
            if (r.n_iterations >= cfg.max_iter) {
                break;
            }
            try {
                auto ms = m_step(data, es.responsibilities, model, &params);
                params = std::move(ms.params);
                r.regularized = r.regularized || ms.regularized;
            } catch (const EmptyComponentError& e) {
                if (++reseeds > cfg.max_reseeds) {
                    throw DegeneracyError(std::string(e.what()) + "; re-seed limit reached");
                }
                reseed(params, es.responsibilities, data.features.values(), data.response,
                       static_cast<Eigen::Index>(e.component()));
                segment_start = r.loglik_trace.size();
                r.reseed_points.push_back(segment_start);
                r.warnings.push_back("start " + std::to_string(start + 1) + ": re-seeded component " +
                                     std::to_string(e.component() + 1) + " at iteration " +
                                     std::to_string(r.n_iterations + 1));
            }
            ++r.n_iterations;
        }
        r.params = std::move(params);
        r.responsibilities = std::move(es.responsibilities);
        r.hard_labels = argmax_labels(r.responsibilities);
        r.complete_loglik = 0.0;
        for (Eigen::Index i = 0; i < es.log_joint.rows(); ++i) {
            r.complete_loglik += es.log_joint(i, r.hard_labels[static_cast<std::size_t>(i)] - 1);
        }
        if (r.regularized) {
            r.warnings.push_back("ridge regularization applied");
        }
        if (model != cfg.model) {
            r.warnings.push_back(std::string(cov::to_string(cfg.model)) + " fitted as " +
                                 std::string(cov::to_string(model)) + " for one-dimensional input");
        }
        outcome.result = std::move(r);
    } catch (const DegeneracyError& e) {
        outcome.failure = "start " + std::to_string(start + 1) + ": " + e.what();
    }
    return outcome;
}

} // namespace

FitResult fit(const LabeledDataset& data, const FitConfig& cfg, const RandomSource& rng) {
    data.validate();
    require_response(data);
    if (cfg.n_starts < 1 || cfg.max_iter < 1 || !(cfg.tol > 0.0)) {
        throw ConfigError("fit: n_starts and max_iter must be positive and tol > 0");
    }
    std::optional<FitResult> best;
    std::string failures;
    for (int s = 0; s < cfg.n_starts; ++s) {
        auto outcome = run_start(data, cfg, rng.child(static_cast<std::uint64_t>(s)), s);
        if (!outcome.result) {
            failures += (failures.empty() ? "" : "; ") + outcome.failure;
            continue;
        }
        if (!best || outcome.result->loglik() > best->loglik()) {
            best = std::move(outcome.result);
        }
    }
    if (!best) {
        throw DegeneracyError("all " + std::to_string(cfg.n_starts) + " EM starts failed: " + failures);
    }
    return std::move(*best);
}

} // namespace cwmtsne::cwm
