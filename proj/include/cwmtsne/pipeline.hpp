#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cwmtsne/cwm.hpp"
#include "cwmtsne/data.hpp"
#include "cwmtsne/report.hpp"
#include "cwmtsne/selection.hpp"
#include "cwmtsne/tsne.hpp"

namespace cwmtsne::pipeline {

/// Environment variable consulted when no output directory is configured.
inline constexpr const char* kOutputDirEnv = "CWMTSNE_OUTPUT_DIR";

struct DatasetSpec {
    std::filesystem::path path;
    std::vector<ColumnRef> features;
    std::optional<ColumnRef> response;
    std::optional<ColumnRef> label;
    bool has_header = true;
};

struct LabelTransformConfig {
    double offset = 0.5;
    double noise_sd = 0.01;
};

struct CwmSection {
    int g_min = 1;
    int g_max = 8;
    std::vector<cov::CovModel> models{cov::kAllModels.begin(), cov::kAllModels.end()};
    int n_starts = 5;
    double tol = 1e-8;
    int max_iter = 500;
    cwm::InitStrategy init = cwm::InitStrategy::random;
    unsigned threads = 0;
};

struct PipelineConfig {
    DatasetSpec dataset;
    bool standardize = true;
    tsne::TsneConfig tsne;
    /// Skip the embedding when the (standardized) input has at most this many columns.
    int embed_skip_max_dim = 3;
    CwmSection cwm;
    LabelTransformConfig label_transform;
    std::vector<selection::Criterion> criteria{selection::kAllCriteria.begin(), selection::kAllCriteria.end()};
    std::filesystem::path output_dir;
    std::uint64_t seed = 0;

    /// Throws ConfigError.
    void validate() const;
};

/// Parses the JSON configuration document. Unknown keys are rejected.
/// Relative dataset and output paths resolve against `base_dir` when given. The result
/// is not validated, so command-line flags can still fill in missing fields.
PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& cfg);

struct Warning {
    std::string stage;
    std::string message;
};

struct EmbeddingSummary {
    bool performed = false;
    int iterations = 0;
    double initial_kl = 0.0;
    double final_kl = 0.0;
    std::vector<double> cost_trace;
};

struct RunReport {
    PipelineConfig config;
    Eigen::Index n_obs = 0;
    Eigen::Index input_dim = 0;
    /// CWM covariates: the embedding, or the standardized features when skipped.
    LabeledDataset cwm_input;
    EmbeddingSummary embedding;
    selection::SweepResult sweep;
    std::vector<report::CellMetrics> metrics;
    std::vector<Warning> warnings;
    /// Wall-clock seconds per stage; written to timing.json, not report.json.
    std::vector<std::pair<std::string, double>> timings;
};

/// load -> standardize -> embed -> transform labels -> sweep -> metrics. When
/// `write_outputs` is set, artifacts are written to config.output_dir as each
/// stage completes. A failing stage rethrows with the stage name prepended,
/// keeping the exception type.
RunReport run_pipeline(const PipelineConfig& cfg, bool write_outputs = true);

/// Machine-readable report (JSON). Byte-identical for identical inputs; the
/// output directory is not echoed.
std::string report_json(const RunReport& report);

/// Writes report.json, sweep.csv, metrics.csv and, when an embedding was
/// computed, cost_trace.csv. Returns the written paths.
std::vector<std::filesystem::path> emit_report(const RunReport& report, const std::filesystem::path& dir);

} // namespace cwmtsne::pipeline
