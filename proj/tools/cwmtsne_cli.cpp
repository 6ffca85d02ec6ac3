// cwmtsne: t-SNE embedding and cluster-weighted model sweeps from the command line.
//
//   cwmtsne embed    --input data.csv --label class --output-dir out/
//   cwmtsne fit      --input data.csv --label class -G 3 --model VVV
//   cwmtsne sweep    --input data.csv --label class --g-max 5 --models EII,VVV
//   cwmtsne metrics  --input labels.csv --pred cluster --truth class
//   cwmtsne pipeline --config run.json
//
// Exit status: 0 success, 2 configuration error, 3 data error, 4 numerical
// degeneracy, 1 anything else.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cwmtsne/covariance.hpp"
#include "cwmtsne/cwm.hpp"
#include "cwmtsne/data.hpp"
#include "cwmtsne/error.hpp"
#include "cwmtsne/metrics.hpp"
#include "cwmtsne/pipeline.hpp"
#include "cwmtsne/report.hpp"
#include "cwmtsne/scatter_plot.hpp"
#include "cwmtsne/selection.hpp"
#include "cwmtsne/tsne.hpp"

namespace fs = std::filesystem;
using namespace cwmtsne;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kDegenerate = 4 };

// Digits select a zero-based column index, anything else a header name.
ColumnRef parse_column(const std::string& s) {
    if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos) {
        return static_cast<std::size_t>(std::stoull(s));
    }
    return s;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

// Flags shared by every subcommand. Unset optionals leave the config value alone.
struct Overrides {
    std::string config;
    std::string input;
    std::string features;
    std::string response;
    std::string label;
    bool no_header = false;
    bool no_standardize = false;
    std::optional<std::uint64_t> seed;
    std::string output_dir;

    std::optional<double> perplexity;
    std::optional<int> iterations;
    std::optional<double> theta;
    std::optional<double> learning_rate;
    std::optional<int> skip_max_dim;

    std::optional<int> g_min;
    std::optional<int> g_max;
    std::string models;
    std::optional<int> n_starts;
    std::optional<double> tol;
    std::optional<int> max_iter;
    std::string init;
    std::optional<unsigned> threads;
    std::string criteria;

    std::optional<double> offset;
    std::optional<double> noise_sd;
};

void add_data_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config, "JSON configuration file");
    cmd->add_option("-i,--input", o.input, "CSV dataset");
    cmd->add_option("--features", o.features, "comma-separated feature columns (default: all others)");
    cmd->add_option("--response", o.response, "response column");
    cmd->add_option("--label", o.label, "reference label column");
    cmd->add_flag("--no-header", o.no_header, "the CSV has no header row");
    cmd->add_flag("--no-standardize", o.no_standardize, "skip z-scoring of the features");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("-o,--output-dir", o.output_dir,
                    std::string("output directory (default: $") + pipeline::kOutputDirEnv + ")");
    cmd->add_option("--offset", o.offset, "label transform offset");
    cmd->add_option("--noise-sd", o.noise_sd, "label transform noise standard deviation");
}

void add_tsne_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--perplexity", o.perplexity, "target perplexity");
    cmd->add_option("--iterations", o.iterations, "gradient-descent iterations");
    cmd->add_option("--theta", o.theta, "accepted for compatibility; forced to 0");
    cmd->add_option("--learning-rate", o.learning_rate, "gradient step size");
    cmd->add_option("--skip-max-dim", o.skip_max_dim, "skip the embedding when d is at most this");
}

void add_cwm_flags(CLI::App* cmd, Overrides& o, bool range) {
    if (range) {
        cmd->add_option("--g-min", o.g_min, "smallest number of components");
        cmd->add_option("--g-max", o.g_max, "largest number of components");
        cmd->add_option("--models", o.models, "'all' or comma-separated codes");
        cmd->add_option("--criteria", o.criteria, "comma-separated criteria");
        cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    }
    cmd->add_option("--n-starts", o.n_starts, "random starts per fit");
    cmd->add_option("--tol", o.tol, "relative log-likelihood tolerance");
    cmd->add_option("--max-iter", o.max_iter, "EM iteration cap");
    cmd->add_option("--init", o.init, "random or kmeans");
}

pipeline::PipelineConfig build_config(const Overrides& o) {
    pipeline::PipelineConfig cfg;
    if (!o.config.empty()) {
        cfg = pipeline::load_config(o.config);
    }
    if (!o.input.empty()) {
        cfg.dataset.path = o.input;
    }
    if (!o.features.empty()) {
        cfg.dataset.features.clear();
        for (const auto& f : split_commas(o.features)) {
            cfg.dataset.features.push_back(parse_column(f));
        }
    }
    if (!o.response.empty()) {
        cfg.dataset.response = parse_column(o.response);
    }
    if (!o.label.empty()) {
        cfg.dataset.label = parse_column(o.label);
    }
    if (o.no_header) {
        cfg.dataset.has_header = false;
    }
    if (o.no_standardize) {
        cfg.standardize = false;
    }
    if (o.seed) {
        cfg.seed = *o.seed;
    }
    if (!o.output_dir.empty()) {
        cfg.output_dir = o.output_dir;
    }
    if (o.perplexity) {
        cfg.tsne.perplexity = *o.perplexity;
    }
    if (o.iterations) {
        cfg.tsne.max_iterations = *o.iterations;
    }
    if (o.theta) {
        cfg.tsne.theta = *o.theta;
    }
    if (o.learning_rate) {
        cfg.tsne.learning_rate = *o.learning_rate;
    }
    if (o.skip_max_dim) {
        cfg.embed_skip_max_dim = *o.skip_max_dim;
    }
    if (o.g_min) {
        cfg.cwm.g_min = *o.g_min;
    }
    if (o.g_max) {
        cfg.cwm.g_max = *o.g_max;
    }
    if (!o.models.empty()) {
        cfg.cwm.models = cov::parse_model_list(o.models);
    }
    if (o.n_starts) {
        cfg.cwm.n_starts = *o.n_starts;
    }
    if (o.tol) {
        cfg.cwm.tol = *o.tol;
    }
    if (o.max_iter) {
        cfg.cwm.max_iter = *o.max_iter;
    }
    if (!o.init.empty()) {
        cfg.cwm.init = cwm::parse_init_strategy(o.init);
    }
    if (o.threads) {
        cfg.cwm.threads = *o.threads;
    }
    if (!o.criteria.empty()) {
        cfg.criteria.clear();
        for (const auto& c : split_commas(o.criteria)) {
            cfg.criteria.push_back(selection::parse_criterion(c));
        }
    }
    if (o.offset) {
        cfg.label_transform.offset = *o.offset;
    }
    if (o.noise_sd) {
        cfg.label_transform.noise_sd = *o.noise_sd;
    }
    cfg.validate();
    return cfg;
}

fs::path output_dir_or_throw(const pipeline::PipelineConfig& cfg) {
    fs::path dir = cfg.output_dir;
    if (dir.empty()) {
        if (const char* env = std::getenv(pipeline::kOutputDirEnv); env != nullptr && *env != '\0') {
            dir = env;
        }
    }
    if (dir.empty()) {
        throw ConfigError(std::string("no output directory: pass --output-dir or set ") + pipeline::kOutputDirEnv);
    }
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& body) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write '" + path.string() + "'");
        }
        out << body;
    }
    fs::rename(tmp, path);
}

CsvSpec csv_spec(const pipeline::PipelineConfig& cfg) {
    CsvSpec spec;
    spec.feature_columns = cfg.dataset.features;
    spec.response_column = cfg.dataset.response;
    spec.label_column = cfg.dataset.label;
    spec.has_header = cfg.dataset.has_header;
    return spec;
}

// Features (standardized when configured) plus a response, derived from the
// labels when the dataset has no response column.
LabeledDataset cwm_dataset(const pipeline::PipelineConfig& cfg) {
    LabeledDataset data = load_csv(cfg.dataset.path, csv_spec(cfg));
    if (cfg.standardize) {
        data.features = standardize(data.features).data;
    }
    if (data.response.size() == 0) {
        if (!data.reference_labels) {
            throw ConfigError("dataset needs --response or --label");
        }
        RandomSource noise = RandomSource(cfg.seed).child(2);
        data.response = transform_labels(*data.reference_labels, cfg.label_transform.offset,
                                         cfg.label_transform.noise_sd, noise);
    }
    data.validate();
    return data;
}

int cmd_embed(const Overrides& o, int snapshot_every) {
    auto cfg = build_config(o);
    const fs::path dir = output_dir_or_throw(cfg);
    LabeledDataset data = load_csv(cfg.dataset.path, csv_spec(cfg));
    DataMatrix x = cfg.standardize ? standardize(data.features).data : data.features;

    tsne::TsneConfig tc = cfg.tsne;
    if (tc.theta != 0.0) {
        std::fprintf(stderr, "warning: theta = %g requested; using the exact gradient (theta = 0)\n", tc.theta);
        tc.theta = 0.0;
    }
    tc.seed = RandomSource(cfg.seed).child(1).seed();

    const fs::path trace_path = dir / "cost_trace.csv";
    const fs::path trace_tmp = trace_path.string() + ".tmp";
    std::ofstream trace(trace_tmp, std::ios::trunc);
    if (!trace) {
        throw Error("cannot write '" + trace_path.string() + "'");
    }
    trace << "iteration,cost\n";
    tsne::EmbedObserver observer;
    observer.on_cost = [&](int iteration, double cost) {
        trace << iteration << ',' << report::format_number(cost) << '\n';
        trace.flush();
    };
    observer.snapshot_every = snapshot_every;
    observer.on_snapshot = [&](int iteration, const Eigen::MatrixXd& y) {
        char name[64];
        std::snprintf(name, sizeof(name), "snapshot_%06d.csv", iteration);
        write_text(dir / name, report::embedding_csv(y));
    };
    const auto state = tsne::embed(x, tc, observer);
    trace.close();
    fs::rename(trace_tmp, trace_path);

    write_text(dir / "embedding.csv", report::embedding_csv(state.Y));
    if (data.reference_labels && state.Y.cols() == 2) {
        plot::ScatterOptions opt;
        opt.title = "t-SNE embedding";
        plot::emit_scatter(state.Y, *data.reference_labels, dir / "scatter_embedding.svg", opt);
    }
    std::printf("iterations: %d\ninitial KL: %.10g\nfinal KL: %.10g\n", state.iteration, state.initial_cost,
                state.final_cost());
    return kOk;
}

int cmd_fit(const Overrides& o, int components, const std::string& model) {
    auto cfg = build_config(o);
    const LabeledDataset data = cwm_dataset(cfg);
    cwm::FitConfig fc;
    fc.components = components;
    fc.model = cov::parse_model(model);
    fc.n_starts = cfg.cwm.n_starts;
    fc.tol = cfg.cwm.tol;
    fc.max_iter = cfg.cwm.max_iter;
    fc.init = cfg.cwm.init;
    const auto result = cwm::fit(data, fc, RandomSource(cfg.seed).child(3));
    const auto crit = selection::information_criteria(result);

    std::printf("G=%d %s loglik=%.10g n_params=%lld iterations=%d converged=%s\n", components,
                std::string(cov::to_string(fc.model)).c_str(), result.loglik(), crit.n_params,
                result.n_iterations, result.converged ? "yes" : "no");
    for (auto c : selection::kAllCriteria) {
        std::printf("  %-5s %s\n", std::string(selection::to_string(c)).c_str(),
                    report::format_number(crit.get(c)).c_str());
    }
    if (data.reference_labels) {
        const auto idx = metrics::compare_partitions(result.hard_labels, *data.reference_labels);
        std::printf("  ARI   %s\n  accuracy %.6f\n", report::format_number(idx.hubert_arabie).c_str(),
                    metrics::majority_accuracy(result.hard_labels, *data.reference_labels));
    }
    for (const auto& w : result.warnings) {
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    }
    if (!cfg.output_dir.empty() || std::getenv(pipeline::kOutputDirEnv) != nullptr) {
        const fs::path dir = output_dir_or_throw(cfg);
        write_text(dir / "fit.json", report::fit_json(result) + "\n");
        write_text(dir / "assignments.csv", report::assignments_csv(result));
    }
    return kOk;
}

int cmd_sweep(const Overrides& o) {
    auto cfg = build_config(o);
    const LabeledDataset data = cwm_dataset(cfg);
    selection::SweepConfig sc;
    for (int g = cfg.cwm.g_min; g <= cfg.cwm.g_max; ++g) {
        sc.components.push_back(g);
    }
    sc.models = cfg.cwm.models;
    sc.fit.n_starts = cfg.cwm.n_starts;
    sc.fit.tol = cfg.cwm.tol;
    sc.fit.max_iter = cfg.cwm.max_iter;
    sc.fit.init = cfg.cwm.init;
    sc.criteria = cfg.criteria;
    sc.threads = cfg.cwm.threads;
    const auto result = selection::sweep(data, sc, RandomSource(cfg.seed).child(3));
    std::fputs(report::sweep_summary(result).c_str(), stdout);
    if (!cfg.output_dir.empty() || std::getenv(pipeline::kOutputDirEnv) != nullptr) {
        const fs::path dir = output_dir_or_throw(cfg);
        write_text(dir / "sweep.csv", report::sweep_csv(result));
    }
    return kOk;
}

int cmd_metrics(const std::string& input, const std::string& pred, const std::string& truth, bool no_header) {
    CsvSpec spec;
    spec.has_header = !no_header;
    spec.feature_columns = {parse_column(pred)};
    spec.label_column = parse_column(truth);
    const LabeledDataset data = load_csv(input, spec);
    std::vector<int> p(static_cast<std::size_t>(data.size()));
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        const double v = data.features.values()(i, 0);
        if (v != static_cast<double>(static_cast<int>(v))) {
            throw DataError("predicted labels must be integers (row " + std::to_string(i + 1) + ")");
        }
        p[static_cast<std::size_t>(i)] = static_cast<int>(v);
    }
    const auto& t = *data.reference_labels;
    const auto idx = metrics::compare_partitions(p, t);
    std::printf("rand,%s\nHA,%s\nMA,%s\nFM,%s\nJaccard,%s\naccuracy,%s\n",
                report::format_number(idx.rand).c_str(), report::format_number(idx.hubert_arabie).c_str(),
                report::format_number(idx.morey_agresti).c_str(),
                report::format_number(idx.fowlkes_mallows).c_str(), report::format_number(idx.jaccard).c_str(),
                report::format_number(metrics::majority_accuracy(p, t)).c_str());
    return kOk;
}

int cmd_pipeline(const Overrides& o) {
    auto cfg = build_config(o);
    const auto report = pipeline::run_pipeline(cfg, true);
    std::fputs(report::sweep_summary(report.sweep).c_str(), stdout);
    for (const auto& w : report.warnings) {
        std::fprintf(stderr, "warning [%s]: %s\n", w.stage.c_str(), w.message.c_str());
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"t-SNE embedding and cluster-weighted model selection"};
    app.require_subcommand(1);
    Overrides o;

    int snapshot_every = 0;
    auto* embed = app.add_subcommand("embed", "compute a t-SNE embedding");
    add_data_flags(embed, o);
    add_tsne_flags(embed, o);
    embed->add_option("--snapshot-every", snapshot_every, "write the map every k iterations");

    int components = 2;
    std::string model = "VVV";
    auto* fit = app.add_subcommand("fit", "fit one cluster-weighted model");
    add_data_flags(fit, o);
    add_cwm_flags(fit, o, false);
    fit->add_option("-G,--components", components, "number of components");
    fit->add_option("-m,--model", model, "covariance model code");

    auto* sweep = app.add_subcommand("sweep", "fit a grid of components x covariance models");
    add_data_flags(sweep, o);
    add_cwm_flags(sweep, o, true);

    std::string m_input, m_pred, m_truth;
    bool m_no_header = false;
    auto* met = app.add_subcommand("metrics", "compare two partitions stored as CSV columns");
    met->add_option("-i,--input", m_input)->required();
    met->add_option("--pred", m_pred, "predicted label column")->required();
    met->add_option("--truth", m_truth, "reference label column")->required();
    met->add_flag("--no-header", m_no_header);

    auto* pipe = app.add_subcommand("pipeline", "standardize, embed, transform, sweep and evaluate");
    add_data_flags(pipe, o);
    add_tsne_flags(pipe, o);
    add_cwm_flags(pipe, o, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (*embed) {
            return cmd_embed(o, snapshot_every);
        }
        if (*fit) {
            return cmd_fit(o, components, model);
        }
        if (*sweep) {
            return cmd_sweep(o);
        }
        if (*met) {
            return cmd_metrics(m_input, m_pred, m_truth, m_no_header);
        }
        return cmd_pipeline(o);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kConfig;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kData;
    } catch (const DegeneracyError& e) {
        std::fprintf(stderr, "numerical degeneracy: %s\n", e.what());
        return kDegenerate;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kOther;
    }
}
