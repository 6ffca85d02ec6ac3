#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cwmtsne/covariance.hpp"
#include "cwmtsne/cwm.hpp"
#include "cwmtsne/error.hpp"
#include "cwmtsne/metrics.hpp"
#include "cwmtsne/pipeline.hpp"
#include "cwmtsne/report.hpp"
#include "cwmtsne/scatter_plot.hpp"
#include "cwmtsne/selection.hpp"
#include "cwmtsne/tsne.hpp"

namespace py = pybind11;
using namespace cwmtsne;

namespace {

LabeledDataset make_dataset(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    LabeledDataset data;
    data.features = DataMatrix(x);
    data.response = y;
    data.validate();
    return data;
}

py::object opt(const std::optional<double>& v) {
    return v ? py::object(py::float_(*v)) : py::object(py::none());
}

py::dict criteria_dict(const selection::CriteriaSet& cs) {
    py::dict out;
    for (auto c : selection::kAllCriteria) {
        out[py::str(std::string(selection::to_string(c)))] = opt(cs.get(c));
    }
    return out;
}

py::dict fit_dict(const cwm::FitResult& f) {
    py::dict out;
    out["model"] = std::string(cov::to_string(f.params.cov_model));
    out["requested_model"] = std::string(cov::to_string(f.requested_model));
    out["loglik"] = f.loglik();
    out["complete_loglik"] = f.complete_loglik;
    out["loglik_trace"] = f.loglik_trace;
    out["reseed_points"] = f.reseed_points;
    out["converged"] = f.converged;
    out["iterations"] = f.n_iterations;
    out["regularized"] = f.regularized;
    out["start"] = f.start_index;
    out["labels"] = f.hard_labels;
    out["responsibilities"] = f.responsibilities;
    out["weights"] = f.params.weights;
    out["means"] = f.params.means;
    out["covariances"] = f.params.covariances;
    out["reg_coeffs"] = f.params.reg_coeffs;
    out["output_vars"] = f.params.output_vars;
    out["n_params"] = selection::count_parameters(f);
    out["criteria"] = criteria_dict(selection::information_criteria(f));
    out["warnings"] = f.warnings;
    return out;
}

cwm::FitConfig fit_config(int components, const std::string& model, int n_starts, int max_iter, double tol,
                          const std::string& init) {
    cwm::FitConfig fc;
    fc.components = components;
    fc.model = cov::parse_model(model);
    fc.n_starts = n_starts;
    fc.max_iter = max_iter;
    fc.tol = tol;
    fc.init = cwm::parse_init_strategy(init);
    return fc;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Exact t-SNE, cluster-weighted models and partition agreement indices";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    auto config = py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<DataError>(m, "DataError", base.ptr());
    auto degenerate = py::register_exception<DegeneracyError>(m, "DegeneracyError", base.ptr());
    py::register_exception<EmptyComponentError>(m, "EmptyComponentError", degenerate.ptr());
    (void)config;

    m.def("models", [] {
        std::vector<std::string> out;
        for (auto c : cov::kAllModels) {
            out.emplace_back(cov::to_string(c));
        }
        return out;
    });
    m.def("param_count", [](const std::string& model, long long d, long long G) {
        return cov::param_count(cov::parse_model(model), d, G);
    }, py::arg("model"), py::arg("d"), py::arg("G"), "Free covariance parameters of a model.");
    m.def("count_parameters", [](const std::string& model, long long d, long long G) {
        return selection::count_parameters(cov::parse_model(model), d, G);
    }, py::arg("model"), py::arg("d"), py::arg("G"));

    m.def("covariance_mstep",
          [](const std::string& model, const std::vector<Eigen::MatrixXd>& scatters, const Eigen::VectorXd& masses) {
              cov::ScatterInput in{scatters, masses};
              auto est = cov::mstep_covariances(cov::parse_model(model), in);
              return py::make_tuple(est.covariances, cov::gaussian_q(est.covariances, in));
          },
          py::arg("model"), py::arg("scatters"), py::arg("masses"),
          "Constrained covariance estimates and their expected log-likelihood term.");

    m.def("calibrate",
          [](const Eigen::MatrixXd& x, double perplexity) {
              auto cal = tsne::conditional_affinities(tsne::pairwise_sq_distances(x), perplexity);
              auto joint = tsne::symmetrize(cal.affinities);
              return py::make_tuple(cal.affinities.values, joint.values, cal.entropies_bits);
          },
          py::arg("x"), py::arg("perplexity") = 30.0,
          "Returns (conditional P, joint P, row entropies in bits).");

    m.def("embed",
          [](const Eigen::MatrixXd& x, double perplexity, int max_iterations, std::uint64_t seed, int output_dim,
             double learning_rate) {
              tsne::TsneConfig cfg;
              cfg.perplexity = perplexity;
              cfg.max_iterations = max_iterations;
              cfg.seed = seed;
              cfg.output_dim = output_dim;
              cfg.learning_rate = learning_rate;
              tsne::EmbeddingState state;
              {
                  py::gil_scoped_release release;
                  state = tsne::embed(DataMatrix(x), cfg);
              }
              return py::make_tuple(state.Y, state.cost_trace, state.initial_cost);
          },
          py::arg("x"), py::arg("perplexity") = 30.0, py::arg("max_iterations") = 1000, py::arg("seed") = 0,
          py::arg("output_dim") = 2, py::arg("learning_rate") = 200.0,
          "Returns (Y, cost trace, initial cost).");

    m.def("transform_labels",
          [](const std::vector<int>& labels, double offset, double noise_sd, std::uint64_t seed) {
              RandomSource rng(seed);
              return transform_labels(labels, offset, noise_sd, rng);
          },
          py::arg("labels"), py::arg("offset") = 0.5, py::arg("noise_sd") = 0.01, py::arg("seed") = 0);

    m.def("fit",
          [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int components, const std::string& model,
             int n_starts, int max_iter, double tol, const std::string& init, std::uint64_t seed) {
              const auto data = make_dataset(x, y);
              const auto fc = fit_config(components, model, n_starts, max_iter, tol, init);
              cwm::FitResult result;
              {
                  py::gil_scoped_release release;
                  result = cwm::fit(data, fc, RandomSource(seed));
              }
              return fit_dict(result);
          },
          py::arg("x"), py::arg("y"), py::arg("components") = 2, py::arg("model") = "VVV", py::arg("n_starts") = 5,
          py::arg("max_iter") = 500, py::arg("tol") = 1e-8, py::arg("init") = "random", py::arg("seed") = 0,
          "Fit a cluster-weighted model; returns a dict of parameters and diagnostics.");

    m.def("sweep",
          [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<int>& components,
             const std::string& models, int n_starts, int max_iter, double tol, std::uint64_t seed,
             unsigned threads) {
              const auto data = make_dataset(x, y);
              selection::SweepConfig sc;
              sc.components = components;
              sc.models = cov::parse_model_list(models);
              sc.fit.n_starts = n_starts;
              sc.fit.max_iter = max_iter;
              sc.fit.tol = tol;
              sc.threads = threads;
              selection::SweepResult result;
              {
                  py::gil_scoped_release release;
                  result = selection::sweep(data, sc, RandomSource(seed));
              }
              py::list cells;
              for (const auto& cell : result.cells) {
                  py::dict c;
                  c["G"] = cell.components;
                  c["model"] = std::string(cov::to_string(cell.model));
                  c["estimated"] = cell.estimated;
                  c["reason"] = cell.failure_reason;
                  if (cell.estimated) {
                      c["criteria"] = criteria_dict(*cell.criteria);
                      c["loglik"] = cell.criteria->loglik;
                      c["labels"] = cell.fit->hard_labels;
                  }
                  cells.append(c);
              }
              py::dict best;
              for (const auto& [crit, index] : result.best) {
                  best[py::str(std::string(selection::to_string(crit)))] = index;
              }
              return py::make_tuple(cells, best);
          },
          py::arg("x"), py::arg("y"), py::arg("components"), py::arg("models") = "all", py::arg("n_starts") = 5,
          py::arg("max_iter") = 500, py::arg("tol") = 1e-8, py::arg("seed") = 0, py::arg("threads") = 1,
          "Returns (cells, best) where best maps criterion name to a cell index.");

    m.def("compare_partitions",
          [](const std::vector<int>& pred, const std::vector<int>& truth) {
              const auto idx = metrics::compare_partitions(pred, truth);
              py::dict out;
              out["rand"] = opt(idx.rand);
              out["HA"] = opt(idx.hubert_arabie);
              out["MA"] = opt(idx.morey_agresti);
              out["FM"] = opt(idx.fowlkes_mallows);
              out["Jaccard"] = opt(idx.jaccard);
              return out;
          },
          py::arg("pred"), py::arg("truth"));
    m.def("pair_counts", [](const std::vector<int>& pred, const std::vector<int>& truth) {
        const auto pc = metrics::pair_counts(pred, truth);
        return py::make_tuple(pc.same_same, pc.same_diff, pc.diff_same, pc.diff_diff);
    }, py::arg("pred"), py::arg("truth"));
    m.def("majority_accuracy", [](const std::vector<int>& pred, const std::vector<int>& truth) {
        return metrics::majority_accuracy(pred, truth);
    }, py::arg("pred"), py::arg("truth"));

    m.def("information_criteria",
          [](double loglik, double complete_loglik, double log_hard_resp_sum, long long k, long long n) {
              return criteria_dict(selection::information_criteria(loglik, complete_loglik, log_hard_resp_sum, k, n));
          },
          py::arg("loglik"), py::arg("complete_loglik"), py::arg("log_hard_resp_sum"), py::arg("n_params"),
          py::arg("n_obs"));

    m.def("render_scatter_svg",
          [](const Eigen::MatrixXd& points, const std::vector<int>& labels, const std::string& title) {
              plot::ScatterOptions opt;
              opt.title = title;
              return plot::render_scatter_svg(points, labels, opt);
          },
          py::arg("points"), py::arg("labels"), py::arg("title") = "");

    m.def("run_pipeline",
          [](const std::string& config_json, const std::filesystem::path& base_dir, bool write_outputs) {
              auto cfg = pipeline::parse_config(config_json, base_dir);
              pipeline::RunReport report;
              {
                  py::gil_scoped_release release;
                  report = pipeline::run_pipeline(cfg, write_outputs);
              }
              return pipeline::report_json(report);
          },
          py::arg("config_json"), py::arg("base_dir") = std::filesystem::path{}, py::arg("write_outputs") = true,
          "Runs the full workflow from a JSON configuration; returns report.json text.");
}
