#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "cwmtsne/random.hpp"

namespace cwmtsne {

/// N x d matrix of finite reals, N >= 1, d >= 1. Validated on construction.
class DataMatrix {
public:
    DataMatrix() = default;
    explicit DataMatrix(Eigen::MatrixXd values);

    const Eigen::MatrixXd& values() const noexcept { return values_; }
    Eigen::Index n_rows() const noexcept { return values_.rows(); }
    Eigen::Index n_cols() const noexcept { return values_.cols(); }
    auto row(Eigen::Index i) const { return values_.row(i); }

private:
    Eigen::MatrixXd values_;
};

/// Original label text for each integer code; code k (1-based) is entry k-1.
struct LabelMapping {
    std::vector<std::string> originals;

    std::size_t size() const noexcept { return originals.size(); }
};

/// Features, response (the regression target y) and optional reference labels.
/// `response` may be empty until it is derived from the labels.
struct LabeledDataset {
    DataMatrix features;
    Eigen::VectorXd response;
    std::optional<std::vector<int>> reference_labels;
    LabelMapping label_mapping;
    std::vector<std::string> feature_names;

    Eigen::Index size() const noexcept { return features.n_rows(); }
    Eigen::Index dim() const noexcept { return features.n_cols(); }

    /// Throws DataError when response/label lengths disagree with N.
    void validate() const;
};

/// Column reference: zero-based index or header name.
using ColumnRef = std::variant<std::size_t, std::string>;

struct CsvSpec {
    /// Empty selects every column not used as response or label.
    std::vector<ColumnRef> feature_columns;
    std::optional<ColumnRef> response_column;
    std::optional<ColumnRef> label_column;
    bool has_header = true;
};

/// Reads a comma-separated file. Label cells that are all positive integers
/// are kept as-is; otherwise labels are coded 1..K by first appearance.
LabeledDataset load_csv(const std::filesystem::path& path, const CsvSpec& spec);

/// Writes features (and response / label columns when present) with 17
/// significant digits so that load_csv reproduces every value bit-for-bit.
void write_csv(const std::filesystem::path& path, const LabeledDataset& data);

/// Two-column sidecar: original_label,integer_code.
void write_label_mapping(const std::filesystem::path& path, const LabelMapping& mapping);

/// ln(label + offset) + Normal(0, noise_sd^2). noise_sd = 0 is deterministic
/// and draws nothing from `rng`.
Eigen::VectorXd transform_labels(std::span<const int> labels, double offset, double noise_sd,
                                 RandomSource& rng);

enum class ConstantColumnPolicy { error, drop };

struct Standardization {
    DataMatrix data;
    Eigen::VectorXd means;
    Eigen::VectorXd sds;
    /// Input column index of each output column.
    std::vector<Eigen::Index> kept_columns;

    /// Undo the scaling: z * sd + mean, column-wise.
    Eigen::MatrixXd restore(const Eigen::MatrixXd& z) const;
};

/// Column-wise z-scores using the sample standard deviation (divisor N-1).
Standardization standardize(const DataMatrix& x,
                            ConstantColumnPolicy policy = ConstantColumnPolicy::error);

} // namespace cwmtsne
