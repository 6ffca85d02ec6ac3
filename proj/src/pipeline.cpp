#include "cwmtsne/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "atomic_file.hpp"
#include "cwmtsne/error.hpp"
#include "cwmtsne/metrics.hpp"
#include "cwmtsne/scatter_plot.hpp"
#include "json_io.hpp"

namespace cwmtsne::pipeline {

namespace {

using detail::Json;

void check_keys(const Json& obj, const char* section, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
        throw ConfigError(std::string("config section '") + section + "' must be an object");
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : obj.items()) {
        if (!ok.count(item.key())) {
            throw ConfigError(std::string("unknown key '") + item.key() + "' in config section '" + section + "'");
        }
    }
}

template <class T>
void read(const Json& obj, const char* key, T& out) {
    if (!obj.contains(key) || obj.at(key).is_null()) {
        return;
    }
    try {
        out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

ColumnRef column_ref(const Json& v) {
    if (v.is_number_unsigned() || v.is_number_integer()) {
        const auto i = v.get<long long>();
        if (i < 0) {
            throw ConfigError("column indices must be non-negative");
        }
        return static_cast<std::size_t>(i);
    }
    if (v.is_string()) {
        return v.get<std::string>();
    }
    throw ConfigError("column references must be names or zero-based indices");
}

Json column_json(const ColumnRef& ref) {
    if (const auto* i = std::get_if<std::size_t>(&ref)) {
        return *i;
    }
    return std::get<std::string>(ref);
}

std::vector<cov::CovModel> models_from(const Json& v) {
    if (v.is_string()) {
        return cov::parse_model_list(v.get<std::string>());
    }
    if (!v.is_array()) {
        throw ConfigError("cwm.models must be a string or a list of codes");
    }
    std::vector<cov::CovModel> out;
    for (const auto& m : v) {
        auto parsed = cov::parse_model_list(m.get<std::string>());
        out.insert(out.end(), parsed.begin(), parsed.end());
    }
    return out;
}

std::filesystem::path resolve_output_dir(const PipelineConfig& cfg) {
    if (!cfg.output_dir.empty()) {
        return cfg.output_dir;
    }
    if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
        return env;
    }
    return {};
}

template <class F>
void run_stage(const char* name, RunReport& report, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string prefix = std::string("stage '") + name + "': ";
    try {
        body();
    } catch (const ConfigError& e) {
        throw ConfigError(prefix + e.what());
    } catch (const DataError& e) {
        throw DataError(prefix + e.what());
    } catch (const DegeneracyError& e) {
        throw DegeneracyError(prefix + e.what());
    } catch (const Error& e) {
        throw Error(prefix + e.what());
    }
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    report.timings.emplace_back(name, dt.count());
}

Json metrics_row_json(const report::CellMetrics& m) {
    Json row;
    row["G"] = m.components;
    row["model"] = std::string(cov::to_string(m.model));
    row["rand"] = detail::to_json(m.indices.rand);
    row["HA"] = detail::to_json(m.indices.hubert_arabie);
    row["MA"] = detail::to_json(m.indices.morey_agresti);
    row["FM"] = detail::to_json(m.indices.fowlkes_mallows);
    row["Jaccard"] = detail::to_json(m.indices.jaccard);
    row["accuracy"] = m.accuracy;
    return row;
}

} // namespace

void PipelineConfig::validate() const {
    if (dataset.path.empty()) {
        throw ConfigError("dataset.path is required");
    }
    if (cwm.g_min < 1 || cwm.g_max < cwm.g_min) {
        throw ConfigError("cwm.g_min must be >= 1 and <= cwm.g_max");
    }
    if (cwm.models.empty()) {
        throw ConfigError("cwm.models must not be empty");
    }
    if (cwm.n_starts < 1 || cwm.max_iter < 1 || !(cwm.tol > 0.0)) {
        throw ConfigError("cwm.n_starts, cwm.max_iter and cwm.tol must be positive");
    }
    if (!(label_transform.noise_sd >= 0.0)) {
        throw ConfigError("label_transform.noise_sd must be non-negative");
    }
    if (criteria.empty()) {
        throw ConfigError("criteria must not be empty");
    }
    if (embed_skip_max_dim < 0) {
        throw ConfigError("tsne.skip_max_dim must be non-negative");
    }
    auto t = tsne;
    t.theta = 0.0; // forced to zero at run time with a warning
    t.validate(0);
}

PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
    Json root;
    try {
        root = Json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(root, "root",
               {"dataset", "standardize", "tsne", "cwm", "label_transform", "criteria", "output_dir", "seed"});
    PipelineConfig cfg;

    const Json ds = root.contains("dataset") ? root.at("dataset") : Json::object();
    check_keys(ds, "dataset", {"path", "features", "response", "label", "has_header"});
    std::string path;
    read(ds, "path", path);
    cfg.dataset.path = path;
    if (!base_dir.empty() && cfg.dataset.path.is_relative() && !cfg.dataset.path.empty()) {
        cfg.dataset.path = base_dir / cfg.dataset.path;
    }
    if (ds.contains("features") && !ds.at("features").is_null()) {
        for (const auto& f : ds.at("features")) {
            cfg.dataset.features.push_back(column_ref(f));
        }
    }
    if (ds.contains("response") && !ds.at("response").is_null()) {
        cfg.dataset.response = column_ref(ds.at("response"));
    }
    if (ds.contains("label") && !ds.at("label").is_null()) {
        cfg.dataset.label = column_ref(ds.at("label"));
    }
    read(ds, "has_header", cfg.dataset.has_header);
    read(root, "standardize", cfg.standardize);

    if (root.contains("tsne")) {
        const auto& t = root.at("tsne");
        check_keys(t, "tsne",
                   {"perplexity", "max_iterations", "output_dim", "theta", "learning_rate", "early_exaggeration",
                    "early_exaggeration_iters", "momentum_initial", "momentum_final", "momentum_switch", "init_sd",
                    "skip_max_dim", "calibration_tol"});
        read(t, "perplexity", cfg.tsne.perplexity);
        read(t, "max_iterations", cfg.tsne.max_iterations);
        read(t, "output_dim", cfg.tsne.output_dim);
        read(t, "theta", cfg.tsne.theta);
        read(t, "learning_rate", cfg.tsne.learning_rate);
        read(t, "early_exaggeration", cfg.tsne.early_exaggeration_factor);
        if (t.contains("early_exaggeration_iters") && !t.at("early_exaggeration_iters").is_null()) {
            int iters = 0;
            read(t, "early_exaggeration_iters", iters);
            cfg.tsne.early_exaggeration_iters = iters;
        }
        read(t, "momentum_initial", cfg.tsne.momentum.initial);
        read(t, "momentum_final", cfg.tsne.momentum.final);
        read(t, "momentum_switch", cfg.tsne.momentum.switch_iteration);
        read(t, "init_sd", cfg.tsne.init_sd);
        read(t, "calibration_tol", cfg.tsne.calibration_tol);
        read(t, "skip_max_dim", cfg.embed_skip_max_dim);
    }

    if (root.contains("cwm")) {
        const auto& c = root.at("cwm");
        check_keys(c, "cwm", {"g_min", "g_max", "models", "n_starts", "tol", "max_iter", "init", "threads"});
        read(c, "g_min", cfg.cwm.g_min);
        read(c, "g_max", cfg.cwm.g_max);
        if (c.contains("models")) {
            cfg.cwm.models = models_from(c.at("models"));
        }
        read(c, "n_starts", cfg.cwm.n_starts);
        read(c, "tol", cfg.cwm.tol);
        read(c, "max_iter", cfg.cwm.max_iter);
        std::string init;
        read(c, "init", init);
        if (!init.empty()) {
            cfg.cwm.init = cwm::parse_init_strategy(init);
        }
        read(c, "threads", cfg.cwm.threads);
    }

    if (root.contains("label_transform")) {
        const auto& l = root.at("label_transform");
        check_keys(l, "label_transform", {"offset", "noise_sd"});
        read(l, "offset", cfg.label_transform.offset);
        read(l, "noise_sd", cfg.label_transform.noise_sd);
    }

    if (root.contains("criteria")) {
        cfg.criteria.clear();
        for (const auto& c : root.at("criteria")) {
            cfg.criteria.push_back(selection::parse_criterion(c.get<std::string>()));
        }
    }
    std::string out_dir;
    read(root, "output_dir", out_dir);
    cfg.output_dir = out_dir;
    if (!base_dir.empty() && !cfg.output_dir.empty() && cfg.output_dir.is_relative()) {
        cfg.output_dir = base_dir / cfg.output_dir;
    }
    read(root, "seed", cfg.seed);
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config '" + path.string() + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

namespace {

Json config_json(const PipelineConfig& cfg) {
    Json root;
    Json ds;
    ds["path"] = cfg.dataset.path.string();
    Json features = Json::array();
    for (const auto& f : cfg.dataset.features) {
        features.push_back(column_json(f));
    }
    ds["features"] = std::move(features);
    ds["response"] = cfg.dataset.response ? column_json(*cfg.dataset.response) : Json(nullptr);
    ds["label"] = cfg.dataset.label ? column_json(*cfg.dataset.label) : Json(nullptr);
    ds["has_header"] = cfg.dataset.has_header;
    root["dataset"] = std::move(ds);
    root["standardize"] = cfg.standardize;

    Json t;
    t["perplexity"] = cfg.tsne.perplexity;
    t["max_iterations"] = cfg.tsne.max_iterations;
    t["output_dim"] = cfg.tsne.output_dim;
    t["theta"] = cfg.tsne.theta;
    t["learning_rate"] = cfg.tsne.learning_rate;
    t["early_exaggeration"] = cfg.tsne.early_exaggeration_factor;
    t["early_exaggeration_iters"] = cfg.tsne.exaggeration_iterations();
    t["momentum_initial"] = cfg.tsne.momentum.initial;
    t["momentum_final"] = cfg.tsne.momentum.final;
    t["momentum_switch"] = cfg.tsne.momentum.switch_iteration;
    t["init_sd"] = cfg.tsne.init_sd;
    t["calibration_tol"] = cfg.tsne.calibration_tol;
    t["skip_max_dim"] = cfg.embed_skip_max_dim;
    root["tsne"] = std::move(t);

    Json c;
    c["g_min"] = cfg.cwm.g_min;
    c["g_max"] = cfg.cwm.g_max;
    Json models = Json::array();
    for (auto m : cfg.cwm.models) {
        models.push_back(std::string(cov::to_string(m)));
    }
    c["models"] = std::move(models);
    c["n_starts"] = cfg.cwm.n_starts;
    c["tol"] = cfg.cwm.tol;
    c["max_iter"] = cfg.cwm.max_iter;
    c["init"] = std::string(cwm::to_string(cfg.cwm.init));
    root["cwm"] = std::move(c);

    Json l;
    l["offset"] = cfg.label_transform.offset;
    l["noise_sd"] = cfg.label_transform.noise_sd;
    root["label_transform"] = std::move(l);

    Json crit = Json::array();
    for (auto k : cfg.criteria) {
        crit.push_back(std::string(selection::to_string(k)));
    }
    root["criteria"] = std::move(crit);
    root["output_dir"] = cfg.output_dir.string();
    root["seed"] = cfg.seed;
    return root;
}

} // namespace

std::string config_to_json(const PipelineConfig& cfg) {
    return config_json(cfg).dump(2);
}

RunReport run_pipeline(const PipelineConfig& cfg_in, bool write_outputs) {
    cfg_in.validate();
    RunReport report;
    report.config = cfg_in;
    PipelineConfig& cfg = report.config;
    const RandomSource master(cfg.seed);

    std::filesystem::path out_dir;
    if (write_outputs) {
        out_dir = resolve_output_dir(cfg);
        if (out_dir.empty()) {
            throw ConfigError(std::string("no output directory: set output_dir or ") + kOutputDirEnv);
        }
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec) {
            throw ConfigError("cannot create output directory '" + out_dir.string() + "'");
        }
    }
    auto write = [&](const char* name, const std::string& body) {
        if (write_outputs) {
            detail::write_file_atomic(out_dir / name, body);
        }
    };

    LabeledDataset data;
    run_stage("load", report, [&] {
        CsvSpec spec;
        spec.feature_columns = cfg.dataset.features;
        spec.response_column = cfg.dataset.response;
        spec.label_column = cfg.dataset.label;
        spec.has_header = cfg.dataset.has_header;
        data = load_csv(cfg.dataset.path, spec);
        if (!data.reference_labels && data.response.size() == 0) {
            throw ConfigError("dataset needs a response column or a label column");
        }
        if (data.reference_labels && write_outputs) {
            write_label_mapping(out_dir / "label_mapping.csv", data.label_mapping);
        }
    });
    report.n_obs = data.size();
    report.input_dim = data.dim();

    DataMatrix features = data.features;
    run_stage("standardize", report, [&] {
        if (cfg.standardize) {
            auto st = standardize(data.features, ConstantColumnPolicy::error);
            features = std::move(st.data);
        }
    });

    run_stage("embed", report, [&] {
        if (features.n_cols() <= cfg.embed_skip_max_dim) {
            return;
        }
        tsne::TsneConfig tc = cfg.tsne;
        if (tc.theta != 0.0) {
            report.warnings.push_back({"embed", "theta = " + report::format_number(tc.theta) +
                                                    " requested; using the exact gradient (theta = 0)"});
            tc.theta = 0.0;
        }
        tc.seed = master.child(1).seed();
        auto state = tsne::embed(features, tc);
        report.embedding.performed = true;
        report.embedding.iterations = state.iteration;
        report.embedding.initial_kl = state.initial_cost;
        report.embedding.final_kl = state.final_cost();
        report.embedding.cost_trace = state.cost_trace;
        features = DataMatrix(state.Y);
        write("embedding.csv", report::embedding_csv(state.Y));
        write("cost_trace.csv", report::cost_trace_csv(state.cost_trace));
    });

    report.cwm_input.features = features;
    report.cwm_input.reference_labels = data.reference_labels;
    report.cwm_input.label_mapping = data.label_mapping;
    for (Eigen::Index k = 0; k < features.n_cols(); ++k) {
        report.cwm_input.feature_names.push_back((report.embedding.performed ? "tsne_" : "z_") +
                                                 std::to_string(k + 1));
    }

    run_stage("transform", report, [&] {
        if (data.response.size() > 0) {
            report.cwm_input.response = data.response;
            return;
        }
        RandomSource noise = master.child(2);
        report.cwm_input.response = transform_labels(*data.reference_labels, cfg.label_transform.offset,
                                                     cfg.label_transform.noise_sd, noise);
    });

    run_stage("sweep", report, [&] {
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
        report.sweep = selection::sweep(report.cwm_input, sc, master.child(3));
        for (const auto& cell : report.sweep.cells) {
            if (!cell.fit) {
                continue;
            }
            for (const auto& w : cell.fit->warnings) {
                report.warnings.push_back({"sweep", "G=" + std::to_string(cell.components) + " " +
                                                        std::string(cov::to_string(cell.model)) + ": " + w});
            }
        }
        write("sweep.csv", report::sweep_csv(report.sweep));
    });

    run_stage("metrics", report, [&] {
        if (!data.reference_labels) {
            return;
        }
        const auto& truth = *data.reference_labels;
        for (const auto& cell : report.sweep.cells) {
            if (!cell.estimated) {
                continue;
            }
            report::CellMetrics m;
            m.components = cell.components;
            m.model = cell.model;
            m.indices = metrics::compare_partitions(cell.fit->hard_labels, truth);
            m.accuracy = metrics::majority_accuracy(cell.fit->hard_labels, truth);
            report.metrics.push_back(m);
        }
        write("metrics.csv", report::metrics_csv(report.metrics));
    });

    if (write_outputs) {
        run_stage("report", report, [&] {
            emit_report(report, out_dir);
            const auto& y = report.cwm_input.features.values();
            const bool planar = y.cols() == 2;
            if (planar && data.reference_labels) {
                plot::ScatterOptions opt;
                opt.title = "reference labels";
                plot::emit_scatter(y, *data.reference_labels, out_dir / "scatter_reference.svg", opt);
            }
            for (const auto& [criterion, index] : report.sweep.best) {
                if (criterion != selection::Criterion::BIC && criterion != selection::Criterion::ICL) {
                    continue;
                }
                const auto& cell = report.sweep.cells[index];
                const std::string tag(selection::to_string(criterion));
                detail::write_file_atomic(out_dir / ("assignments_" + tag + ".csv"),
                                          report::assignments_csv(*cell.fit));
                if (planar) {
                    plot::ScatterOptions opt;
                    opt.title = tag + ": G=" + std::to_string(cell.components) + " " +
                                std::string(cov::to_string(cell.model));
                    plot::emit_scatter(y, cell.fit->hard_labels, out_dir / ("scatter_best_" + tag + ".svg"), opt);
                }
            }
        });
        Json timing = Json::object();
        for (const auto& [stage, secs] : report.timings) {
            timing[stage] = secs;
        }
        detail::write_file_atomic(out_dir / "timing.json", timing.dump(2) + "\n");
    }
    return report;
}

std::string report_json(const RunReport& report) {
    Json root;
    root["format"] = "cwmtsne-report/1";
    root["config"] = config_json(report.config);
    root["config"].erase("output_dir");
    root["metric_definitions"] = {
        {"rand", "(a + d) / (a + b + c + d) over unordered pairs"},
        {"HA", "Hubert-Arabie adjusted Rand: expectation of sum C(n_kl,2) under the hypergeometric model"},
        {"MA", "Morey-Agresti adjusted Rand: expectation of sum n_kl^2 taken as sum n_k.^2 sum n_.l^2 / N^2"},
        {"FM", "a / sqrt((a + b)(a + c))"},
        {"Jaccard", "a / (a + b + c)"},
        {"accuracy", "each cluster mapped to its modal reference class"},
    };
    root["criteria_orientation"] = "larger is better";

    Json data;
    data["n"] = report.n_obs;
    data["input_dim"] = report.input_dim;
    data["cwm_dim"] = report.cwm_input.dim();
    data["classes"] = report.cwm_input.reference_labels ? Json(report.cwm_input.label_mapping.size()) : Json(nullptr);
    root["data"] = std::move(data);

    Json emb;
    emb["performed"] = report.embedding.performed;
    emb["iterations"] = report.embedding.iterations;
    emb["initial_kl"] = report.embedding.initial_kl;
    emb["final_kl"] = report.embedding.final_kl;
    root["embedding"] = std::move(emb);

    Json cells = Json::array();
    for (const auto& cell : report.sweep.cells) {
        Json c;
        c["G"] = cell.components;
        c["model"] = std::string(cov::to_string(cell.model));
        if (cell.estimated) {
            c["status"] = "estimated";
            c["loglik"] = cell.criteria->loglik;
            c["n_params"] = cell.criteria->n_params;
            c["criteria"] = detail::criteria_to_json(*cell.criteria);
            c["iterations"] = cell.fit->n_iterations;
            c["converged"] = cell.fit->converged;
            c["regularized"] = cell.fit->regularized;
            c["reseeds"] = cell.fit->reseed_points.size();
            c["weights"] = detail::to_json(cell.fit->params.weights);
        } else {
            c["status"] = report::kNotEstimated;
            c["reason"] = cell.failure_reason;
        }
        cells.push_back(std::move(c));
    }
    root["sweep"] = std::move(cells);

    Json best = Json::object();
    for (auto criterion : report.config.criteria) {
        auto it = report.sweep.best.find(criterion);
        if (it == report.sweep.best.end()) {
            continue;
        }
        const auto& cell = report.sweep.cells[it->second];
        best[std::string(selection::to_string(criterion))] = {
            {"G", cell.components},
            {"model", std::string(cov::to_string(cell.model))},
            {"value", *cell.criteria->get(criterion)},
        };
    }
    root["best"] = std::move(best);

    Json metric_rows = Json::array();
    for (const auto& m : report.metrics) {
        metric_rows.push_back(metrics_row_json(m));
    }
    root["metrics"] = std::move(metric_rows);

    Json warnings = Json::array();
    for (const auto& w : report.warnings) {
        warnings.push_back({{"stage", w.stage}, {"message", w.message}});
    }
    root["warnings"] = std::move(warnings);
    return root.dump(2) + "\n";
}

std::vector<std::filesystem::path> emit_report(const RunReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw Error("cannot create '" + dir.string() + "'");
    }
    std::vector<std::filesystem::path> written;
    auto put = [&](const char* name, const std::string& body) {
        detail::write_file_atomic(dir / name, body);
        written.push_back(dir / name);
    };
    put("report.json", report_json(report));
    put("sweep.csv", report::sweep_csv(report.sweep));
    put("metrics.csv", report::metrics_csv(report.metrics));
    if (report.embedding.performed) {
        put("cost_trace.csv", report::cost_trace_csv(report.embedding.cost_trace));
    }
    return written;
}

} // namespace cwmtsne::pipeline
