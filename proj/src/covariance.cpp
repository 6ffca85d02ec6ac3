#include "cwmtsne/covariance.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cwmtsne/error.hpp"

namespace cwmtsne::cov {

namespace {

constexpr std::array<std::string_view, 14> kNames = {"EII", "VII", "EEI", "VEI", "EVI", "VVI", "EEE",
                                                     "VEE", "EVE", "EEV", "VVE", "VEV", "EVV", "VVV"};

constexpr double kShapeFloor = 1e-12;
constexpr double kRidgeTrigger = 1e-10;
constexpr double kRidge = 1e-8;

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Geometric mean of positive entries, i.e. det(diag(v))^(1/d).
double det_root(const Vec& v) {
    return std::exp(v.array().log().mean());
}

// Clamp at kShapeFloor and rescale to unit product.
Vec normalize_shape(Vec v) {
    v = v.cwiseMax(kShapeFloor);
    return v / det_root(v);
}

struct SortedEigen {
    Vec values;   // descending
    Mat vectors;
};

SortedEigen sorted_eigen(const Mat& s) {
    Eigen::SelfAdjointEigenSolver<Mat> es(s);
    if (es.info() != Eigen::Success) {
        throw DegeneracyError("eigendecomposition failed to converge");
    }
    SortedEigen out;
    out.values = es.eigenvalues().reverse();
    out.vectors = es.eigenvectors().rowwise().reverse();
    return out;
}

double log_det_spd(const Mat& s, bool& ok) {
    Eigen::LLT<Mat> llt(s);
    if (llt.info() != Eigen::Success) {
        ok = false;
        return 0.0;
    }
    ok = true;
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

void require_mass(const ScatterInput& s, bool per_component) {
    const double total = s.masses.sum();
    if (!(total > 0.0)) {
        throw DegeneracyError("total responsibility mass is zero");
    }
    if (per_component) {
        for (Eigen::Index g = 0; g < s.masses.size(); ++g) {
            if (!(s.masses[g] > 0.0)) {
                throw DegeneracyError("component " + std::to_string(g + 1) + " has zero responsibility mass");
            }
        }
    }
}

Mat pooled(const ScatterInput& s) {
    Mat w = Mat::Zero(s.dim(), s.dim());
    for (const auto& wg : s.scatters) {
        w += wg;
    }
    return w;
}

std::vector<Mat> replicate(const Mat& sigma, std::size_t g) {
    return std::vector<Mat>(g, sigma);
}

Vec warm_volumes(const std::vector<Mat>& warm) {
    Vec out(static_cast<Eigen::Index>(warm.size()));
    const double d = static_cast<double>(warm.front().rows());
    for (std::size_t g = 0; g < warm.size(); ++g) {
        bool ok = true;
        const double ld = log_det_spd(warm[g], ok);
        out[static_cast<Eigen::Index>(g)] = ok ? std::exp(ld / d) : warm[g].trace() / d;
    }
    return out;
}

Vec cold_volumes(const ScatterInput& s) {
    const auto G = static_cast<Eigen::Index>(s.components());
    const double d = static_cast<double>(s.dim());
    Vec out(G);
    for (Eigen::Index g = 0; g < G; ++g) {
        out[g] = std::max(s.scatters[static_cast<std::size_t>(g)].trace() / (s.masses[g] * d), kShapeFloor);
    }
    return out;
}

bool converged(double prev, double cur, double tol) {
    return std::abs(cur - prev) <= tol * (1.0 + std::abs(cur));
}

// ---- closed forms ---------------------------------------------------------

std::vector<Mat> fit_eii(const ScatterInput& s) {
    const double d = static_cast<double>(s.dim());
    const double lambda = pooled(s).trace() / (s.masses.sum() * d);
    return replicate(lambda * Mat::Identity(s.dim(), s.dim()), s.components());
}

std::vector<Mat> fit_vii(const ScatterInput& s) {
    const double d = static_cast<double>(s.dim());
    std::vector<Mat> out;
    for (std::size_t g = 0; g < s.components(); ++g) {
        const double lambda = s.scatters[g].trace() / (s.masses[static_cast<Eigen::Index>(g)] * d);
        out.push_back(lambda * Mat::Identity(s.dim(), s.dim()));
    }
    return out;
}

std::vector<Mat> fit_eei(const ScatterInput& s) {
    Vec diag = pooled(s).diagonal() / s.masses.sum();
    return replicate(Mat(diag.asDiagonal()), s.components());
}

std::vector<Mat> fit_evi(const ScatterInput& s) {
    double volume_sum = 0.0;
    std::vector<Vec> shapes;
    for (const auto& wg : s.scatters) {
        Vec diag = wg.diagonal().cwiseMax(kShapeFloor);
        volume_sum += det_root(diag);
        shapes.push_back(normalize_shape(diag));
    }
    const double lambda = volume_sum / s.masses.sum();
    std::vector<Mat> out;
    for (const auto& a : shapes) {
        out.push_back(Mat((lambda * a).asDiagonal()));
    }
    return out;
}

std::vector<Mat> fit_vvi(const ScatterInput& s) {
    std::vector<Mat> out;
    for (std::size_t g = 0; g < s.components(); ++g) {
        Vec diag = s.scatters[g].diagonal() / s.masses[static_cast<Eigen::Index>(g)];
        out.push_back(Mat(diag.asDiagonal()));
    }
    return out;
}

std::vector<Mat> fit_eee(const ScatterInput& s) {
    return replicate(pooled(s) / s.masses.sum(), s.components());
}

std::vector<Mat> fit_eev(const ScatterInput& s) {
    const auto d = s.dim();
    Vec omega_sum = Vec::Zero(d);
    std::vector<Mat> orientations;
    for (const auto& wg : s.scatters) {
        auto e = sorted_eigen(wg);
        omega_sum += e.values.cwiseMax(0.0);
        orientations.push_back(std::move(e.vectors));
    }
    omega_sum = omega_sum.cwiseMax(kShapeFloor);
    const double lambda = det_root(omega_sum) / s.masses.sum();
    const Vec shape = normalize_shape(omega_sum);
    std::vector<Mat> out;
    for (const auto& dg : orientations) {
        out.push_back(lambda * dg * shape.asDiagonal() * dg.transpose());
    }
    return out;
}

std::vector<Mat> fit_evv(const ScatterInput& s) {
    double volume_sum = 0.0;
    std::vector<Mat> shapes;
    for (std::size_t g = 0; g < s.components(); ++g) {
        auto e = sorted_eigen(s.scatters[g]);
        Vec vals = e.values.cwiseMax(kShapeFloor * std::max(e.values[0], kShapeFloor));
        if (!(e.values[0] > 0.0)) {
            throw DegeneracyError("component " + std::to_string(g + 1) + " has a zero scatter matrix");
        }
        const double root = det_root(vals);
        volume_sum += root;
        shapes.push_back(e.vectors * (vals / root).asDiagonal() * e.vectors.transpose());
    }
    const double lambda = volume_sum / s.masses.sum();
    std::vector<Mat> out;
    for (auto& c : shapes) {
        out.push_back(lambda * c);
    }
    return out;
}

std::vector<Mat> fit_vvv(const ScatterInput& s) {
    std::vector<Mat> out;
    for (std::size_t g = 0; g < s.components(); ++g) {
        out.push_back(s.scatters[g] / s.masses[static_cast<Eigen::Index>(g)]);
    }
    return out;
}

// ---- iterative ------------------------------------------------------------

struct IterativeFit {
    std::vector<Mat> covariances;
    double objective = -std::numeric_limits<double>::infinity();
    int iterations = 0;
};

// VEI: Sigma_g = lambda_g diag(A). Alternates A | lambda and lambda | A.
IterativeFit fit_vei(const ScatterInput& s, Vec volumes, const MStepOptions& opt) {
    const auto G = static_cast<Eigen::Index>(s.components());
    const double d = static_cast<double>(s.dim());
    IterativeFit fit;
    double prev = -std::numeric_limits<double>::infinity();
    for (int it = 1; it <= opt.max_inner; ++it) {
        Vec acc = Vec::Zero(s.dim());
        for (Eigen::Index g = 0; g < G; ++g) {
            acc += s.scatters[static_cast<std::size_t>(g)].diagonal() / volumes[g];
        }
        const Vec shape = normalize_shape(acc);
        for (Eigen::Index g = 0; g < G; ++g) {
            const Vec diag = s.scatters[static_cast<std::size_t>(g)].diagonal();
            volumes[g] = std::max((diag.array() / shape.array()).sum() / (s.masses[g] * d), kShapeFloor);
        }
        fit.covariances.clear();
        for (Eigen::Index g = 0; g < G; ++g) {
            fit.covariances.push_back(Mat((volumes[g] * shape).asDiagonal()));
        }
        fit.objective = gaussian_q(fit.covariances, s);
        fit.iterations = it;
        if (converged(prev, fit.objective, opt.inner_tol)) {
            break;
        }
        prev = fit.objective;
    }
    return fit;
}

// VEE: Sigma_g = lambda_g C, det C = 1.
IterativeFit fit_vee(const ScatterInput& s, Vec volumes, const MStepOptions& opt) {
    const auto G = static_cast<Eigen::Index>(s.components());
    const auto d = s.dim();
    IterativeFit fit;
    double prev = -std::numeric_limits<double>::infinity();
    for (int it = 1; it <= opt.max_inner; ++it) {
        Mat acc = Mat::Zero(d, d);
        for (Eigen::Index g = 0; g < G; ++g) {
            acc += s.scatters[static_cast<std::size_t>(g)] / volumes[g];
        }
        auto e = sorted_eigen(acc);
        const Vec shape = normalize_shape(e.values);
        const Mat c = e.vectors * shape.asDiagonal() * e.vectors.transpose();
        const Mat c_inv = e.vectors * shape.cwiseInverse().asDiagonal() * e.vectors.transpose();
        for (Eigen::Index g = 0; g < G; ++g) {
            const double tr = (s.scatters[static_cast<std::size_t>(g)] * c_inv).trace();
            volumes[g] = std::max(tr / (s.masses[g] * static_cast<double>(d)), kShapeFloor);
        }
        fit.covariances.clear();
        for (Eigen::Index g = 0; g < G; ++g) {
            fit.covariances.push_back(volumes[g] * c);
        }
        fit.objective = gaussian_q(fit.covariances, s);
        fit.iterations = it;
        if (converged(prev, fit.objective, opt.inner_tol)) {
            break;
        }
        prev = fit.objective;
    }
    return fit;
}

// VEV: Sigma_g = lambda_g D_g A D_g^T with D_g the eigenvectors of W_g.
IterativeFit fit_vev(const ScatterInput& s, Vec volumes, const MStepOptions& opt) {
    const auto G = static_cast<Eigen::Index>(s.components());
    const auto d = s.dim();
    std::vector<SortedEigen> eig;
    for (const auto& wg : s.scatters) {
        auto e = sorted_eigen(wg);
        e.values = e.values.cwiseMax(0.0);
        eig.push_back(std::move(e));
    }
    IterativeFit fit;
    double prev = -std::numeric_limits<double>::infinity();
    for (int it = 1; it <= opt.max_inner; ++it) {
        Vec acc = Vec::Zero(d);
        for (Eigen::Index g = 0; g < G; ++g) {
            acc += eig[static_cast<std::size_t>(g)].values / volumes[g];
        }
        const Vec shape = normalize_shape(acc);
        for (Eigen::Index g = 0; g < G; ++g) {
            const double tr = (eig[static_cast<std::size_t>(g)].values.array() / shape.array()).sum();
            volumes[g] = std::max(tr / (s.masses[g] * static_cast<double>(d)), kShapeFloor);
        }
        fit.covariances.clear();
        for (Eigen::Index g = 0; g < G; ++g) {
            const auto& dg = eig[static_cast<std::size_t>(g)].vectors;
            fit.covariances.push_back(volumes[g] * dg * shape.asDiagonal() * dg.transpose());
        }
        fit.objective = gaussian_q(fit.covariances, s);
        fit.iterations = it;
        if (converged(prev, fit.objective, opt.inner_tol)) {
            break;
        }
        prev = fit.objective;
    }
    return fit;
}

// One majorize-minimize step for min_D sum_g tr(W_g D B_g D^T) over orthogonal D.
// W_g - omega_g I is negative semidefinite, so the objective is concave in D up
// to a constant and its tangent plane majorizes it; the linear surrogate is
// minimized by D = -U V^T from the SVD of the gradient.
Mat orientation_mm_step(const ScatterInput& s, const Mat& d_cur, const std::vector<Vec>& inv_shapes) {
    const auto d = s.dim();
    Mat m = Mat::Zero(d, d);
    for (std::size_t g = 0; g < s.components(); ++g) {
        const auto& wg = s.scatters[g];
        const double omega = sorted_eigen(wg).values[0];
        m += (wg - omega * Mat::Identity(d, d)) * d_cur * inv_shapes[g].asDiagonal();
    }
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return -svd.matrixU() * svd.matrixV().transpose();
}

// EVE: Sigma_g = lambda D A_g D^T.
IterativeFit fit_eve(const ScatterInput& s, Mat orientation, const MStepOptions& opt) {
    const auto G = s.components();
    IterativeFit fit;
    double prev = -std::numeric_limits<double>::infinity();
    std::vector<Vec> shapes(G);
    for (int it = 1; it <= opt.max_inner; ++it) {
        double volume_sum = 0.0;
        for (std::size_t g = 0; g < G; ++g) {
            Vec diag = (orientation.transpose() * s.scatters[g] * orientation).diagonal().cwiseMax(kShapeFloor);
            volume_sum += det_root(diag);
            shapes[g] = normalize_shape(diag);
        }
        const double lambda = volume_sum / s.masses.sum();
        fit.covariances.clear();
        for (std::size_t g = 0; g < G; ++g) {
            fit.covariances.push_back(lambda * orientation * shapes[g].asDiagonal() * orientation.transpose());
        }
        fit.objective = gaussian_q(fit.covariances, s);
        fit.iterations = it;
        if (converged(prev, fit.objective, opt.inner_tol)) {
            break;
        }
        prev = fit.objective;
        std::vector<Vec> inv(G);
        for (std::size_t g = 0; g < G; ++g) {
            inv[g] = shapes[g].cwiseInverse();
        }
        orientation = orientation_mm_step(s, orientation, inv);
    }
    return fit;
}

// VVE: Sigma_g = D diag(c_g) D^T.
IterativeFit fit_vve(const ScatterInput& s, Mat orientation, const MStepOptions& opt) {
    const auto G = s.components();
    IterativeFit fit;
    double prev = -std::numeric_limits<double>::infinity();
    std::vector<Vec> diag(G);
    for (int it = 1; it <= opt.max_inner; ++it) {
        for (std::size_t g = 0; g < G; ++g) {
            diag[g] = ((orientation.transpose() * s.scatters[g] * orientation).diagonal() /
                       s.masses[static_cast<Eigen::Index>(g)])
                          .cwiseMax(kShapeFloor);
        }
        fit.covariances.clear();
        for (std::size_t g = 0; g < G; ++g) {
            fit.covariances.push_back(orientation * diag[g].asDiagonal() * orientation.transpose());
        }
        fit.objective = gaussian_q(fit.covariances, s);
        fit.iterations = it;
        if (converged(prev, fit.objective, opt.inner_tol)) {
            break;
        }
        prev = fit.objective;
        std::vector<Vec> inv(G);
        for (std::size_t g = 0; g < G; ++g) {
            inv[g] = diag[g].cwiseInverse();
        }
        orientation = orientation_mm_step(s, orientation, inv);
    }
    return fit;
}

IterativeFit best_of(IterativeFit a, IterativeFit b) {
    if (b.objective > a.objective) {
        b.iterations += a.iterations;
        return b;
    }
    a.iterations += b.iterations;
    return a;
}

void regularize(std::vector<Mat>& covs, bool& flagged) {
    for (std::size_t g = 0; g < covs.size(); ++g) {
        auto& sigma = covs[g];
        sigma = 0.5 * (sigma + sigma.transpose());
        const double d = static_cast<double>(sigma.rows());
        const double tr = sigma.trace();
        if (!sigma.allFinite() || !(tr > 0.0)) {
            throw DegeneracyError("component " + std::to_string(g + 1) + " has a singular covariance");
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(sigma, Eigen::EigenvaluesOnly);
        if (es.eigenvalues()[0] < kRidgeTrigger * tr / d) {
            sigma.diagonal().array() += kRidge * tr / d;
            flagged = true;
            Eigen::LLT<Mat> llt(sigma);
            if (llt.info() != Eigen::Success) {
                throw DegeneracyError("component " + std::to_string(g + 1) +
                                      " covariance is singular after regularization");
            }
        }
    }
}

} // namespace

std::string_view to_string(CovModel model) {
    return kNames[model_index(model)];
}

std::size_t model_index(CovModel model) {
    return static_cast<std::size_t>(model);
}

CovModel parse_model(std::string_view code) {
    std::string upper(code);
    for (auto& c : upper) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        if (kNames[i] == upper) {
            return kAllModels[i];
        }
    }
    throw ConfigError("unknown covariance model '" + std::string(code) + "'");
}

std::vector<CovModel> parse_model_list(std::string_view list) {
    std::vector<CovModel> out;
    std::string token;
    auto flush = [&] {
        auto b = token.find_first_not_of(' ');
        auto e = token.find_last_not_of(' ');
        if (b != std::string::npos) {
            auto t = token.substr(b, e - b + 1);
            if (t == "all" || t == "ALL") {
                out.insert(out.end(), kAllModels.begin(), kAllModels.end());
            } else {
                out.push_back(parse_model(t));
            }
        }
        token.clear();
    };
    for (char c : list) {
        if (c == ',') {
            flush();
        } else {
            token.push_back(c);
        }
    }
    flush();
    if (out.empty()) {
        throw ConfigError("empty covariance model list");
    }
    return out;
}

CovModel effective_model(CovModel model, Eigen::Index d) {
    if (d != 1) {
        return model;
    }
    return to_string(model)[0] == 'E' ? CovModel::EII : CovModel::VII;
}

EigenDecomposition decompose(const Eigen::MatrixXd& sigma) {
    const auto d = sigma.rows();
    if (d == 0 || sigma.cols() != d) {
        throw DataError("decompose: expected a non-empty square matrix");
    }
    if (!sigma.isApprox(sigma.transpose(), 1e-12)) {
        throw DataError("decompose: matrix is not symmetric");
    }
    Vec values(d);
    Mat vectors(d, d);
    const bool diagonal = (sigma - Mat(sigma.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
    if (diagonal) {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return sigma(a, a) > sigma(b, b); });
        vectors.setZero();
        for (Eigen::Index k = 0; k < d; ++k) {
            const auto src = order[static_cast<std::size_t>(k)];
            values[k] = sigma(src, src);
            vectors(src, k) = 1.0;
        }
    } else {
        auto e = sorted_eigen(sigma);
        values = e.values;
        vectors = e.vectors;
        for (Eigen::Index k = 0; k < d; ++k) {
            Eigen::Index arg = 0;
            double best = -1.0;
            for (Eigen::Index i = 0; i < d; ++i) {
                const double a = std::abs(vectors(i, k));
                if (a > best * (1.0 + 1e-12)) {
                    best = a;
                    arg = i;
                }
            }
            if (vectors(arg, k) < 0.0) {
                vectors.col(k) *= -1.0;
            }
        }
    }
    if (!(values.minCoeff() > 0.0)) {
        throw DataError("decompose: matrix is not positive definite");
    }
    EigenDecomposition out;
    out.volume = det_root(values);
    out.shape = values / out.volume;
    out.orientation = std::move(vectors);
    return out;
}

Eigen::MatrixXd compose(const EigenDecomposition& dec) {
    Mat s = dec.volume * dec.orientation * dec.shape.asDiagonal() * dec.orientation.transpose();
    return 0.5 * (s + s.transpose());
}

long long param_count(CovModel model, long long d, long long G) {
    switch (model) {
    case CovModel::EII: return 1;
    case CovModel::VII: return G;
    case CovModel::EEI: return d;
    case CovModel::VEI: return G + (d - 1);
    case CovModel::EVI: return 1 + G * (d - 1);
    case CovModel::VVI: return G * d;
    case CovModel::EEE: return d * (d + 1) / 2;
    case CovModel::VEE: return G + (d + 2) * (d - 1) / 2;
    case CovModel::EVE: return 1 + (d + 2 * G) * (d - 1) / 2;
    case CovModel::EEV: return 1 + (d - 1) + G * (d * (d - 1) / 2);
    case CovModel::VVE: return G + (d + 2 * G) * (d - 1) / 2;
    case CovModel::VEV: return G + (d - 1) + G * (d * (d - 1) / 2);
    case CovModel::EVV: return 1 + G * (d + 2) * (d - 1) / 2;
    case CovModel::VVV: return G * (d * (d + 1) / 2);
    }
    return 0;
}

double gaussian_q(const std::vector<Eigen::MatrixXd>& covariances, const ScatterInput& scatter) {
    const double d = static_cast<double>(scatter.dim());
    const double log2pi = std::log(2.0 * M_PI);
    double q = 0.0;
    for (std::size_t g = 0; g < covariances.size(); ++g) {
        Eigen::LLT<Mat> llt(covariances[g]);
        if (llt.info() != Eigen::Success) {
            return -std::numeric_limits<double>::infinity();
        }
        const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        const double tr = llt.solve(scatter.scatters[g]).trace();
        q += -0.5 * (scatter.masses[static_cast<Eigen::Index>(g)] * (d * log2pi + log_det) + tr);
    }
    return q;
}

CovarianceEstimate mstep_covariances(CovModel model, const ScatterInput& scatter,
                                     const std::vector<Eigen::MatrixXd>* warm_start, const MStepOptions& options) {
    const auto G = scatter.components();
    const auto d = scatter.dim();
    if (G == 0 || d == 0 || scatter.masses.size() != static_cast<Eigen::Index>(G)) {
        throw ConfigError("mstep_covariances: empty or inconsistent scatter input");
    }
    for (const auto& w : scatter.scatters) {
        if (w.rows() != d || w.cols() != d || !w.allFinite()) {
            throw DegeneracyError("mstep_covariances: malformed scatter matrix");
        }
    }
    const bool use_warm = warm_start != nullptr && warm_start->size() == G && warm_start->front().rows() == d;
    model = effective_model(model, d);

    CovarianceEstimate est;
    switch (model) {
    case CovModel::EII:
        require_mass(scatter, false);
        est.covariances = fit_eii(scatter);
        break;
    case CovModel::VII:
        require_mass(scatter, true);
        est.covariances = fit_vii(scatter);
        break;
    case CovModel::EEI:
        require_mass(scatter, false);
        est.covariances = fit_eei(scatter);
        break;
    case CovModel::EVI:
        require_mass(scatter, false);
        est.covariances = fit_evi(scatter);
        break;
    case CovModel::VVI:
        require_mass(scatter, true);
        est.covariances = fit_vvi(scatter);
        break;
    case CovModel::EEE:
        require_mass(scatter, false);
        est.covariances = fit_eee(scatter);
        break;
    case CovModel::EEV:
        require_mass(scatter, false);
        est.covariances = fit_eev(scatter);
        break;
    case CovModel::EVV:
        require_mass(scatter, false);
        est.covariances = fit_evv(scatter);
        break;
    case CovModel::VVV:
        require_mass(scatter, true);
        est.covariances = fit_vvv(scatter);
        break;
    case CovModel::VEI:
    case CovModel::VEE:
    case CovModel::VEV: {
        require_mass(scatter, true);
        auto run = [&](Vec volumes) {
            if (model == CovModel::VEI) return fit_vei(scatter, std::move(volumes), options);
            if (model == CovModel::VEE) return fit_vee(scatter, std::move(volumes), options);
            return fit_vev(scatter, std::move(volumes), options);
        };
        IterativeFit fit = run(cold_volumes(scatter));
        if (use_warm) {
            fit = best_of(std::move(fit), run(warm_volumes(*warm_start)));
        }
        est.covariances = std::move(fit.covariances);
        est.inner_iterations = fit.iterations;
        break;
    }
    case CovModel::EVE:
    case CovModel::VVE: {
        require_mass(scatter, model == CovModel::VVE);
        auto run = [&](Mat orientation) {
            return model == CovModel::EVE ? fit_eve(scatter, std::move(orientation), options)
                                          : fit_vve(scatter, std::move(orientation), options);
        };
        IterativeFit fit = run(sorted_eigen(pooled(scatter)).vectors);
        if (use_warm) {
            // Distinct weights keep the shared eigenvectors identifiable when
            // one component's shape has tied entries.
            Mat combined = Mat::Zero(d, d);
            for (std::size_t g = 0; g < G; ++g) {
                combined += static_cast<double>(g + 1) * (*warm_start)[g];
            }
            Mat warm_orientation = sorted_eigen(combined).vectors;
            fit = best_of(std::move(fit), run(std::move(warm_orientation)));
        }
        est.covariances = std::move(fit.covariances);
        est.inner_iterations = fit.iterations;
        break;
    }
    }
    regularize(est.covariances, est.regularized);
    return est;
}

} // namespace cwmtsne::cov
