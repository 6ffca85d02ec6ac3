#include "cwmtsne/scatter_plot.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <sstream>
#include <vector>

#include "atomic_file.hpp"
#include "cwmtsne/error.hpp"

namespace cwmtsne::plot {

namespace {

constexpr std::array<const char*, 10> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

} // namespace

std::string render_scatter_svg(const Eigen::MatrixXd& points, std::span<const int> labels,
                               const ScatterOptions& options) {
    if (points.cols() != 2) {
        throw ConfigError("scatter plots need a two-column map, got " + std::to_string(points.cols()));
    }
    if (labels.empty() || points.rows() == 0) {
        throw DataError("scatter plot needs at least one labeled point");
    }
    if (static_cast<Eigen::Index>(labels.size()) != points.rows()) {
        throw DataError("scatter plot: label count does not match point count");
    }

    std::vector<int> classes(labels.begin(), labels.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    auto color = [&](int label) {
        auto k = static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), label) - classes.begin());
        return kPalette[k % kPalette.size()];
    };

    const double w = options.width;
    const double h = options.height;
    const double left = 60;
    const double right = 110;
    const double top = 40;
    const double bottom = 50;
    const double plot_w = w - left - right;
    const double plot_h = h - top - bottom;

    double xmin = points.col(0).minCoeff();
    double xmax = points.col(0).maxCoeff();
    double ymin = points.col(1).minCoeff();
    double ymax = points.col(1).maxCoeff();
    if (xmax - xmin <= 0.0) {
        xmin -= 1.0;
        xmax += 1.0;
    }
    if (ymax - ymin <= 0.0) {
        ymin -= 1.0;
        ymax += 1.0;
    }
    auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * plot_w; };
    auto sy = [&](double y) { return top + plot_h - (y - ymin) / (ymax - ymin) * plot_h; };

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << options.width << "\" height=\""
       << options.height << "\" viewBox=\"0 0 " << options.width << ' ' << options.height << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << options.width << "\" height=\"" << options.height
       << "\" fill=\"white\"/>\n";
    if (!options.title.empty()) {
        os << "<text x=\"" << fmt(w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           << "font-size=\"15\">" << escape(options.title) << "</text>\n";
    }
    os << "<g stroke=\"black\" stroke-width=\"1\">\n";
    os << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top + plot_h) << "\" x2=\"" << fmt(left + plot_w)
       << "\" y2=\"" << fmt(top + plot_h) << "\"/>\n";
    os << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(left) << "\" y2=\""
       << fmt(top + plot_h) << "\"/>\n";
    os << "</g>\n";
    os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<text x=\"" << fmt(left) << "\" y=\"" << fmt(top + plot_h + 16) << "\">" << fmt(xmin) << "</text>\n";
    os << "<text x=\"" << fmt(left + plot_w) << "\" y=\"" << fmt(top + plot_h + 16) << "\" text-anchor=\"end\">"
       << fmt(xmax) << "</text>\n";
    os << "<text x=\"" << fmt(left - 4) << "\" y=\"" << fmt(top + plot_h) << "\" text-anchor=\"end\">" << fmt(ymin)
       << "</text>\n";
    os << "<text x=\"" << fmt(left - 4) << "\" y=\"" << fmt(top + 10) << "\" text-anchor=\"end\">" << fmt(ymax)
       << "</text>\n";
    os << "<text x=\"" << fmt(left + plot_w / 2) << "\" y=\"" << fmt(h - 12) << "\" text-anchor=\"middle\">"
       << escape(options.x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << fmt(top + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << fmt(top + plot_h / 2) << ")\">" << escape(options.y_label) << "</text>\n";
    os << "</g>\n";

    os << "<g fill-opacity=\"0.75\">\n";
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const int label = labels[static_cast<std::size_t>(i)];
        os << "<circle cx=\"" << fmt(sx(points(i, 0))) << "\" cy=\"" << fmt(sy(points(i, 1))) << "\" r=\"3\" fill=\""
           << color(label) << "\"/>\n";
    }
    os << "</g>\n";

    os << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (std::size_t k = 0; k < classes.size(); ++k) {
        const double y = top + 18.0 * static_cast<double>(k);
        os << "<rect x=\"" << fmt(w - right + 16) << "\" y=\"" << fmt(y) << "\" width=\"10\" height=\"10\" fill=\""
           << color(classes[k]) << "\"/>\n";
        os << "<text x=\"" << fmt(w - right + 32) << "\" y=\"" << fmt(y + 9) << "\">" << classes[k] << "</text>\n";
    }
    os << "</g>\n";
    os << "</svg>\n";
    return os.str();
}

void emit_scatter(const Eigen::MatrixXd& points, std::span<const int> labels, const std::filesystem::path& path,
                  const ScatterOptions& options) {
    detail::write_file_atomic(path, render_scatter_svg(points, labels, options));
}

} // namespace cwmtsne::plot
