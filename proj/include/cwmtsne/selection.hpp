#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cwmtsne/cwm.hpp"

namespace cwmtsne::selection {

/// Information criteria, all oriented so that larger is better.
enum class Criterion { AIC, AICc, AIC3, AICu, AWE, BIC, CAIC, ICL };

inline constexpr std::array<Criterion, 8> kAllCriteria = {Criterion::AIC, Criterion::AICc, Criterion::AIC3,
                                                          Criterion::AICu, Criterion::AWE, Criterion::BIC,
                                                          Criterion::CAIC, Criterion::ICL};

std::string_view to_string(Criterion c);
Criterion parse_criterion(std::string_view name);

/// (G-1) weights + G d means + covariance parameters + G (d+1) regression
/// coefficients + G output variances.
long long count_parameters(cov::CovModel model, long long d, long long G);
long long count_parameters(const cwm::FitResult& fit);

struct CriteriaSet {
    std::array<std::optional<double>, 8> values{};
    long long n_params = 0;
    double loglik = 0.0;
    long long n_obs = 0;

    /// Absent when undefined (AICc and AICu need N > k + 1).
    std::optional<double> get(Criterion c) const { return values[static_cast<std::size_t>(c)]; }
};

/// Sufficient statistics of a fit for the criteria:
///   loglik, complete-data loglik at hard labels, and sum_i log r_{i, hard(i)}.
CriteriaSet information_criteria(double loglik, double complete_loglik, double log_hard_resp_sum,
                                 long long n_params, long long n_obs);

CriteriaSet information_criteria(const cwm::FitResult& fit);

struct SweepConfig {
    std::vector<int> components;
    std::vector<cov::CovModel> models;
    /// `components` and `model` are overwritten per cell.
    cwm::FitConfig fit;
    std::vector<Criterion> criteria{kAllCriteria.begin(), kAllCriteria.end()};
    /// Worker threads; 0 means hardware concurrency.
    unsigned threads = 1;
};

struct SweepCell {
    int components = 0;
    cov::CovModel model = cov::CovModel::VVV;
    bool estimated = false;
    /// Machine-readable failure reason when not estimated.
    std::string failure_reason;
    std::optional<CriteriaSet> criteria;
    std::optional<cwm::FitResult> fit;
};

struct SweepResult {
    /// Row-major over (components, models) in configuration order.
    std::vector<SweepCell> cells;
    /// Index into `cells` of the argmax for each requested criterion.
    std::map<Criterion, std::size_t> best;
};

/// Seed of a cell: rng.child(G * 64 + model index), so results do not depend on
/// evaluation order.
std::uint64_t cell_seed_index(int components, cov::CovModel model);

/// Fits every (G, model) cell. Failed cells are kept with estimated = false.
/// Throws DegeneracyError if no cell could be estimated.
SweepResult sweep(const LabeledDataset& data, const SweepConfig& config, const RandomSource& rng);

} // namespace cwmtsne::selection
