#include "cwmtsne/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "cwmtsne/error.hpp"
#include "atomic_file.hpp"

namespace cwmtsne {

DataMatrix::DataMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1) {
        throw DataError("data matrix must have at least one row and one column");
    }
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
        for (Eigen::Index i = 0; i < values_.rows(); ++i) {
            if (!std::isfinite(values_(i, j))) {
                throw DataError("non-finite value at row " + std::to_string(i + 1) + ", column " +
                                std::to_string(j + 1));
            }
        }
    }
}

void LabeledDataset::validate() const {
    const auto n = size();
    if (response.size() != 0 && response.size() != n) {
        throw DataError("response length " + std::to_string(response.size()) +
                        " does not match row count " + std::to_string(n));
    }
    if (reference_labels && static_cast<Eigen::Index>(reference_labels->size()) != n) {
        throw DataError("label length " + std::to_string(reference_labels->size()) +
                        " does not match row count " + std::to_string(n));
    }
    for (Eigen::Index i = 0; i < response.size(); ++i) {
        if (!std::isfinite(response[i])) {
            throw DataError("non-finite response at row " + std::to_string(i + 1));
        }
    }
}

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(" \t\r\n");
    std::string out(s.substr(b, e - b + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
        out = out.substr(1, out.size() - 2);
    }
    return out;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string current;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
            current.push_back(c);
        } else if (c == ',' && !quoted) {
            cells.push_back(trim(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    cells.push_back(trim(current));
    return cells;
}

std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) {
        return std::nullopt;
    }
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') {
        ++first;
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

std::optional<int> parse_positive_int(const std::string& s) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || value < 1) {
        return std::nullopt;
    }
    return value;
}

std::size_t resolve(const ColumnRef& ref, const std::vector<std::string>& header, std::size_t n_cols) {
    if (const auto* idx = std::get_if<std::size_t>(&ref)) {
        if (*idx >= n_cols) {
            throw DataError("column index " + std::to_string(*idx) + " out of range (file has " +
                            std::to_string(n_cols) + " columns)");
        }
        return *idx;
    }
    const auto& name = std::get<std::string>(ref);
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw DataError("column '" + name + "' not found in header");
    }
    return static_cast<std::size_t>(it - header.begin());
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

LabeledDataset load_csv(const std::filesystem::path& path, const CsvSpec& spec) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header;
    std::string line;
    bool first = true;
    std::size_t n_cols = 0;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (first && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
            line = line.substr(3); // UTF-8 BOM
        }
        if (trim(line).empty()) {
            continue;
        }
        auto cells = split_line(line);
        if (first) {
            n_cols = cells.size();
            first = false;
            if (spec.has_header) {
                header = std::move(cells);
                continue;
            }
        }
        if (cells.size() != n_cols) {
            throw DataError("ragged row at line " + std::to_string(line_no) + ": expected " +
                            std::to_string(n_cols) + " fields, found " + std::to_string(cells.size()));
        }
        rows.push_back(std::move(cells));
    }
    if (rows.empty()) {
        throw DataError("'" + path.string() + "' contains no data rows");
    }
    if (header.empty()) {
        for (std::size_t j = 0; j < n_cols; ++j) {
            header.push_back("V" + std::to_string(j + 1));
        }
    }

    std::optional<std::size_t> response_col;
    std::optional<std::size_t> label_col;
    if (spec.response_column) {
        response_col = resolve(*spec.response_column, header, n_cols);
    }
    if (spec.label_column) {
        label_col = resolve(*spec.label_column, header, n_cols);
    }
    std::vector<std::size_t> feature_cols;
    if (spec.feature_columns.empty()) {
        for (std::size_t j = 0; j < n_cols; ++j) {
            if (j != response_col && j != label_col) {
                feature_cols.push_back(j);
            }
        }
    } else {
        for (const auto& ref : spec.feature_columns) {
            feature_cols.push_back(resolve(ref, header, n_cols));
        }
    }
    if (feature_cols.empty()) {
        throw DataError("no feature columns selected");
    }

    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto d = static_cast<Eigen::Index>(feature_cols.size());
    auto numeric = [&](std::size_t r, std::size_t c) {
        auto v = parse_double(rows[r][c]);
        if (!v) {
            throw DataError("non-numeric value '" + rows[r][c] + "' at data row " + std::to_string(r + 1) +
                            ", column '" + header[c] + "'");
        }
        return *v;
    };

    LabeledDataset out;
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            x(i, j) = numeric(static_cast<std::size_t>(i), feature_cols[static_cast<std::size_t>(j)]);
        }
    }
    out.features = DataMatrix(std::move(x));
    for (auto c : feature_cols) {
        out.feature_names.push_back(header[c]);
    }

    if (response_col) {
        out.response.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            out.response[i] = numeric(static_cast<std::size_t>(i), *response_col);
        }
    }

    if (label_col) {
        std::vector<int> labels(rows.size());
        bool all_int = std::all_of(rows.begin(), rows.end(),
                                   [&](const auto& r) { return parse_positive_int(r[*label_col]).has_value(); });
        std::map<std::string, int> codes;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& text = rows[i][*label_col];
            auto [it, inserted] = codes.try_emplace(text, 0);
            if (inserted) {
                it->second = all_int ? *parse_positive_int(text) : static_cast<int>(codes.size());
                out.label_mapping.originals.push_back(text);
            }
            labels[i] = it->second;
        }
        if (all_int) {
            // Sidecar for integer labels is the identity; keep it indexed by code.
            int max_code = 0;
            for (int v : labels) {
                max_code = std::max(max_code, v);
            }
            out.label_mapping.originals.assign(static_cast<std::size_t>(max_code), std::string{});
            for (int v : labels) {
                out.label_mapping.originals[static_cast<std::size_t>(v - 1)] = std::to_string(v);
            }
        }
        out.reference_labels = std::move(labels);
    }
    out.validate();
    return out;
}

void write_csv(const std::filesystem::path& path, const LabeledDataset& data) {
    data.validate();
    std::ostringstream os;
    const auto d = data.dim();
    std::vector<std::string> names = data.feature_names;
    if (static_cast<Eigen::Index>(names.size()) != d) {
        names.clear();
        for (Eigen::Index j = 0; j < d; ++j) {
            names.push_back("x" + std::to_string(j + 1));
        }
    }
    for (Eigen::Index j = 0; j < d; ++j) {
        os << (j ? "," : "") << names[static_cast<std::size_t>(j)];
    }
    const bool has_response = data.response.size() > 0;
    if (has_response) {
        os << ",response";
    }
    if (data.reference_labels) {
        os << ",label";
    }
    os << '\n';
    const auto& x = data.features.values();
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            os << (j ? "," : "") << format_double(x(i, j));
        }
        if (has_response) {
            os << ',' << format_double(data.response[i]);
        }
        if (data.reference_labels) {
            os << ',' << (*data.reference_labels)[static_cast<std::size_t>(i)];
        }
        os << '\n';
    }
    detail::write_file_atomic(path, os.str());
}

void write_label_mapping(const std::filesystem::path& path, const LabelMapping& mapping) {
    std::ostringstream os;
    os << "original_label,integer_code\n";
    for (std::size_t k = 0; k < mapping.originals.size(); ++k) {
        if (mapping.originals[k].empty()) {
            continue;
        }
        os << mapping.originals[k] << ',' << (k + 1) << '\n';
    }
    detail::write_file_atomic(path, os.str());
}

Eigen::VectorXd transform_labels(std::span<const int> labels, double offset, double noise_sd,
                                 RandomSource& rng) {
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
        throw ConfigError("label noise sd must be finite and non-negative");
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 1 || static_cast<double>(labels[i]) + offset <= 0.0) {
            throw DataError("label " + std::to_string(labels[i]) + " at row " + std::to_string(i + 1) +
                            " is not a positive integer");
        }
        out[static_cast<Eigen::Index>(i)] = std::log(static_cast<double>(labels[i]) + offset);
    }
    if (noise_sd > 0.0) {
        for (Eigen::Index i = 0; i < out.size(); ++i) {
            out[i] += rng.normal(0.0, noise_sd);
        }
    }
    return out;
}

Eigen::MatrixXd Standardization::restore(const Eigen::MatrixXd& z) const {
    Eigen::MatrixXd x = z;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        x.col(j) = x.col(j).array() * sds[j] + means[j];
    }
    return x;
}

Standardization standardize(const DataMatrix& x, ConstantColumnPolicy policy) {
    const auto& v = x.values();
    const auto n = v.rows();
    if (n < 2) {
        throw DataError("standardization needs at least two rows");
    }
    Standardization out;
    std::vector<double> means;
    std::vector<double> sds;
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        const double mean = v.col(j).mean();
        const double ss = (v.col(j).array() - mean).square().sum();
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        if (!(sd > 0.0)) {
            if (policy == ConstantColumnPolicy::error) {
                throw DataError("column " + std::to_string(j + 1) + " is constant");
            }
            continue;
        }
        out.kept_columns.push_back(j);
        means.push_back(mean);
        sds.push_back(sd);
    }
    if (out.kept_columns.empty()) {
        throw DataError("every column is constant");
    }
    const auto d = static_cast<Eigen::Index>(out.kept_columns.size());
    Eigen::MatrixXd z(n, d);
    out.means = Eigen::Map<Eigen::VectorXd>(means.data(), d);
    out.sds = Eigen::Map<Eigen::VectorXd>(sds.data(), d);
    for (Eigen::Index k = 0; k < d; ++k) {
        z.col(k) = (v.col(out.kept_columns[static_cast<std::size_t>(k)]).array() - out.means[k]) / out.sds[k];
    }
    out.data = DataMatrix(std::move(z));
    return out;
}

} // namespace cwmtsne
