#pragma once

#include <filesystem>
#include <span>
#include <string>

#include <Eigen/Core>

namespace cwmtsne::plot {

struct ScatterOptions {
    std::string title;
    std::string x_label = "dim 1";
    std::string y_label = "dim 2";
    int width = 640;
    int height = 520;
};

/// SVG document with one <circle> per point, colored by label, plus a legend
/// built from <rect> swatches. Output is byte-stable for fixed inputs.
std::string render_scatter_svg(const Eigen::MatrixXd& points, std::span<const int> labels,
                               const ScatterOptions& options = {});

void emit_scatter(const Eigen::MatrixXd& points, std::span<const int> labels, const std::filesystem::path& path,
                  const ScatterOptions& options = {});

} // namespace cwmtsne::plot
