#include "cwmtsne/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cwmtsne/error.hpp"

namespace cwmtsne::metrics {

namespace {

std::vector<int> distinct(std::span<const int> v) {
    std::vector<int> out(v.begin(), v.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::size_t position(const std::vector<int>& sorted, int value) {
    return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), value) - sorted.begin());
}

std::uint64_t choose2(std::int64_t n) {
    return n < 2 ? 0u : static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n - 1) / 2u;
}

std::optional<double> ratio(double num, double den) {
    if (den == 0.0) {
        return std::nullopt;
    }
    return num / den;
}

void check_lengths(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size()) {
        throw DataError("label sequences differ in length (" + std::to_string(pred.size()) + " vs " +
                        std::to_string(truth.size()) + ")");
    }
}

} // namespace

ContingencyTable contingency(std::span<const int> pred, std::span<const int> truth) {
    check_lengths(pred, truth);
    ContingencyTable t;
    t.pred_labels = distinct(pred);
    t.true_labels = distinct(truth);
    const auto rows = t.pred_labels.size();
    const auto cols = t.true_labels.size();
    t.counts.assign(rows * cols, 0);
    t.pred_totals.assign(rows, 0);
    t.true_totals.assign(cols, 0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const auto r = position(t.pred_labels, pred[i]);
        const auto c = position(t.true_labels, truth[i]);
        ++t.counts[r * cols + c];
        ++t.pred_totals[r];
        ++t.true_totals[c];
    }
    t.total = static_cast<std::int64_t>(pred.size());
    return t;
}

PairCounts pair_counts(const ContingencyTable& t) {
    std::uint64_t joint = 0;
    for (auto n : t.counts) {
        joint += choose2(n);
    }
    std::uint64_t pred_same = 0;
    for (auto n : t.pred_totals) {
        pred_same += choose2(n);
    }
    std::uint64_t true_same = 0;
    for (auto n : t.true_totals) {
        true_same += choose2(n);
    }
    PairCounts pc;
    pc.same_same = joint;
    pc.same_diff = pred_same - joint;
    pc.diff_same = true_same - joint;
    pc.diff_diff = choose2(t.total) - pred_same - true_same + joint;
    return pc;
}

PairCounts pair_counts(std::span<const int> pred, std::span<const int> truth) {
    check_lengths(pred, truth);
    if (pred.size() < 2) {
        throw DataError("pair counting needs at least two observations");
    }
    return pair_counts(contingency(pred, truth));
}

AgreementIndices indices(const PairCounts& pc, const ContingencyTable& t) {
    const double a = static_cast<double>(pc.same_same);
    const double b = static_cast<double>(pc.same_diff);
    const double c = static_cast<double>(pc.diff_same);
    const double d = static_cast<double>(pc.diff_diff);
    const double total = a + b + c + d;

    AgreementIndices out;
    out.rand = ratio(a + d, total);

    // Hubert-Arabie: (index - E[index]) / (max - E[index]) on sum C(n_kl, 2).
    const double pred_pairs = a + b;
    const double true_pairs = a + c;
    if (total > 0.0) {
        const double expected = pred_pairs * true_pairs / total;
        out.hubert_arabie = ratio(a - expected, 0.5 * (pred_pairs + true_pairs) - expected);
    }

    // Morey-Agresti: the same form on sums of squared counts with expectation
    // sum n_k.^2 sum n_.l^2 / N^2.
    double sq_joint = 0.0;
    for (auto n : t.counts) {
        sq_joint += static_cast<double>(n) * static_cast<double>(n);
    }
    double sq_pred = 0.0;
    for (auto n : t.pred_totals) {
        sq_pred += static_cast<double>(n) * static_cast<double>(n);
    }
    double sq_true = 0.0;
    for (auto n : t.true_totals) {
        sq_true += static_cast<double>(n) * static_cast<double>(n);
    }
    const double n2 = static_cast<double>(t.total) * static_cast<double>(t.total);
    if (n2 > 0.0) {
        const double expected = sq_pred * sq_true / n2;
        out.morey_agresti = ratio(sq_joint - expected, 0.5 * (sq_pred + sq_true) - expected);
    }

    out.fowlkes_mallows = ratio(a, std::sqrt(pred_pairs * true_pairs));
    out.jaccard = ratio(a, a + b + c);
    return out;
}

AgreementIndices compare_partitions(std::span<const int> pred, std::span<const int> truth) {
    auto t = contingency(pred, truth);
    return indices(pair_counts(pred, truth), t);
}

std::vector<std::pair<int, int>> majority_mapping(std::span<const int> pred, std::span<const int> truth) {
    const auto t = contingency(pred, truth);
    std::vector<std::pair<int, int>> out;
    for (std::size_t r = 0; r < t.pred_labels.size(); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < t.true_labels.size(); ++c) {
            if (t.at(r, c) > t.at(r, best)) {
                best = c;
            }
        }
        out.emplace_back(t.pred_labels[r], t.true_labels[best]);
    }
    return out;
}

double majority_accuracy(std::span<const int> pred, std::span<const int> truth) {
    check_lengths(pred, truth);
    if (pred.empty()) {
        throw DataError("majority accuracy of an empty labeling");
    }
    const auto mapping = majority_mapping(pred, truth);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        auto it = std::lower_bound(mapping.begin(), mapping.end(), std::pair{pred[i], 0},
                                   [](const auto& a, const auto& b) { return a.first < b.first; });
        correct += it->second == truth[i] ? 1u : 0u;
    }
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

} // namespace cwmtsne::metrics
