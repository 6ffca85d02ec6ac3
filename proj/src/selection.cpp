#include "cwmtsne/selection.hpp"

#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <thread>

#include "cwmtsne/error.hpp"

namespace cwmtsne::selection {

namespace {

constexpr std::array<std::string_view, 8> kCriterionNames = {"AIC", "AICc", "AIC3", "AICu",
                                                             "AWE", "BIC",  "CAIC", "ICL"};

void set(CriteriaSet& cs, Criterion c, double v) {
    cs.values[static_cast<std::size_t>(c)] = v;
}

std::string classify_failure(const std::string& what) {
    if (what.find("empty") != std::string::npos) {
        return "empty_component: " + what;
    }
    if (what.find("zero density") != std::string::npos) {
        return "unsupported_observation: " + what;
    }
    return "degenerate: " + what;
}

} // namespace

std::string_view to_string(Criterion c) {
    return kCriterionNames[static_cast<std::size_t>(c)];
}

Criterion parse_criterion(std::string_view name) {
    for (std::size_t i = 0; i < kCriterionNames.size(); ++i) {
        if (kCriterionNames[i].size() == name.size()) {
            bool eq = true;
            for (std::size_t k = 0; k < name.size(); ++k) {
                eq = eq && std::tolower(static_cast<unsigned char>(kCriterionNames[i][k])) ==
                               std::tolower(static_cast<unsigned char>(name[k]));
            }
            if (eq) {
                return kAllCriteria[i];
            }
        }
    }
    throw ConfigError("unknown information criterion '" + std::string(name) + "'");
}

long long count_parameters(cov::CovModel model, long long d, long long G) {
    return (G - 1) + G * d + cov::param_count(model, d, G) + G * (d + 1) + G;
}

long long count_parameters(const cwm::FitResult& fit) {
    const auto& p = fit.params;
    return count_parameters(p.cov_model, p.dim(), p.components());
}

CriteriaSet information_criteria(double loglik, double complete_loglik, double log_hard_resp_sum,
                                 long long n_params, long long n_obs) {
    CriteriaSet cs;
    cs.loglik = loglik;
    cs.n_params = n_params;
    cs.n_obs = n_obs;
    const double k = static_cast<double>(n_params);
    const double n = static_cast<double>(n_obs);
    const double log_n = std::log(n);

    const double aic = 2.0 * loglik - 2.0 * k;
    const double bic = 2.0 * loglik - k * log_n;
    set(cs, Criterion::AIC, aic);
    set(cs, Criterion::AIC3, 2.0 * loglik - 3.0 * k);
    set(cs, Criterion::BIC, bic);
    set(cs, Criterion::CAIC, 2.0 * loglik - k * (1.0 + log_n));
    set(cs, Criterion::AWE, 2.0 * complete_loglik - 2.0 * k * (1.5 + log_n));
    set(cs, Criterion::ICL, bic + 2.0 * log_hard_resp_sum);
    if (n > k + 1.0) {
        const double aicc = aic - 2.0 * k * (k + 1.0) / (n - k - 1.0);
        set(cs, Criterion::AICc, aicc);
        set(cs, Criterion::AICu, aicc - n * std::log(n / (n - k - 1.0)));
    }
    return cs;
}

CriteriaSet information_criteria(const cwm::FitResult& fit) {
    double log_hard = 0.0;
    for (std::size_t i = 0; i < fit.hard_labels.size(); ++i) {
        const double r = fit.responsibilities(static_cast<Eigen::Index>(i), fit.hard_labels[i] - 1);
        log_hard += std::log(r);
    }
    return information_criteria(fit.loglik(), fit.complete_loglik, log_hard, count_parameters(fit),
                                fit.responsibilities.rows());
}

std::uint64_t cell_seed_index(int components, cov::CovModel model) {
    return static_cast<std::uint64_t>(components) * 64u + cov::model_index(model);
}

SweepResult sweep(const LabeledDataset& data, const SweepConfig& config, const RandomSource& rng) {
    if (config.components.empty() || config.models.empty()) {
        throw ConfigError("sweep needs at least one component count and one model");
    }
    for (int g : config.components) {
        if (g < 1) {
            throw ConfigError("component counts must be positive");
        }
    }
    data.validate();

    SweepResult result;
    for (int g : config.components) {
        for (auto m : config.models) {
            SweepCell cell;
            cell.components = g;
            cell.model = m;
            result.cells.push_back(std::move(cell));
        }
    }

    auto evaluate = [&](SweepCell& cell) {
        cwm::FitConfig fc = config.fit;
        fc.components = cell.components;
        fc.model = cell.model;
        try {
            if (cell.components > data.size()) {
                throw DegeneracyError("more components than observations");
            }
            auto fit = cwm::fit(data, fc, rng.child(cell_seed_index(cell.components, cell.model)));
            cell.criteria = information_criteria(fit);
            cell.fit = std::move(fit);
            cell.estimated = true;
        } catch (const DegeneracyError& e) {
            cell.estimated = false;
            cell.failure_reason = classify_failure(e.what());
        }
    };

    unsigned threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
    threads = std::min<unsigned>(threads, static_cast<unsigned>(result.cells.size()));
    if (threads <= 1) {
        for (auto& cell : result.cells) {
            evaluate(cell);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < result.cells.size(); i = next++) {
                    try {
                        evaluate(result.cells[i]);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!first_error) {
                            first_error = std::current_exception();
                        }
                    }
                }
            });
        }
        for (auto& th : pool) {
            th.join();
        }
        if (first_error) {
            std::rethrow_exception(first_error);
        }
    }

    bool any = false;
    for (const auto& cell : result.cells) {
        any = any || cell.estimated;
    }
    if (!any) {
        throw DegeneracyError("every sweep cell failed");
    }
    for (auto c : config.criteria) {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < result.cells.size(); ++i) {
            const auto& cell = result.cells[i];
            if (!cell.estimated) {
                continue;
            }
            auto v = cell.criteria->get(c);
            if (!v) {
                continue;
            }
            if (!best || *v > *result.cells[*best].criteria->get(c)) {
                best = i;
            }
        }
        if (best) {
            result.best[c] = *best;
        }
    }
    return result;
}

} // namespace cwmtsne::selection
