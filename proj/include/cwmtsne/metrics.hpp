#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace cwmtsne::metrics {

/// Cross-tabulation of predicted (rows) against reference (columns) labels.
/// Labels are arbitrary integers; rows/columns follow ascending label order.
struct ContingencyTable {
    std::vector<int> pred_labels;
    std::vector<int> true_labels;
    std::vector<std::int64_t> counts;  // row-major, pred x true
    std::vector<std::int64_t> pred_totals;
    std::vector<std::int64_t> true_totals;
    std::int64_t total = 0;

    std::int64_t at(std::size_t r, std::size_t c) const { return counts[r * true_labels.size() + c]; }
};

ContingencyTable contingency(std::span<const int> pred, std::span<const int> truth);

/// Unordered pair classification. "same_diff" = same predicted cluster,
/// different reference class.
struct PairCounts {
    std::uint64_t same_same = 0;
    std::uint64_t same_diff = 0;
    std::uint64_t diff_same = 0;
    std::uint64_t diff_diff = 0;

    std::uint64_t total() const { return same_same + same_diff + diff_same + diff_diff; }
    friend bool operator==(const PairCounts&, const PairCounts&) = default;
};

/// From the table via sum C(n_kl, 2) identities, O(K^2).
PairCounts pair_counts(const ContingencyTable& table);
/// Throws DataError on length mismatch or fewer than two observations.
PairCounts pair_counts(std::span<const int> pred, std::span<const int> truth);

/// Absent values mark undefined (0/0) indices.
struct AgreementIndices {
    std::optional<double> rand;
    std::optional<double> hubert_arabie;   // adjusted Rand, hypergeometric expectation
    std::optional<double> morey_agresti;   // adjusted Rand, multinomial-approximation expectation
    std::optional<double> fowlkes_mallows;
    std::optional<double> jaccard;
};

AgreementIndices indices(const PairCounts& pc, const ContingencyTable& table);
AgreementIndices compare_partitions(std::span<const int> pred, std::span<const int> truth);

/// (predicted label, modal reference label) for every predicted cluster, ties
/// to the smaller reference label.
std::vector<std::pair<int, int>> majority_mapping(std::span<const int> pred, std::span<const int> truth);

/// Fraction of observations whose reference label equals the modal class of
/// their predicted cluster.
double majority_accuracy(std::span<const int> pred, std::span<const int> truth);

} // namespace cwmtsne::metrics
