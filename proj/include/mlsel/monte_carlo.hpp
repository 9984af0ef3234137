#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mlsel/estimators.hpp"

namespace mlsel {

/// Two-sided 95% normal critical value used for coverage.
inline constexpr double kCritical95 = 1.959964;

struct SimConfig {
    DgpId dgp;
    Index n = 5000;
    int replications = 200;
    std::uint64_t seed = 1;
    std::vector<Estimator> estimators;  // empty: the design's default menu
    double delta = 1.0;
    int bootstrap_b = 0;
    int threads = 1;
    EstimatorOptions options;
    double max_failure_rate = 0.05;
};

/// Seed of replication `rep` on stream `stream`: two 32-bit words drawn from
/// std::seed_seq{lo32(base), hi32(base), rep, stream}.
std::uint64_t replication_seed(std::uint64_t base, std::uint64_t rep, std::uint32_t stream);

inline constexpr std::uint32_t kStreamData = 0;
inline constexpr std::uint32_t kStreamBootstrap = 1;

struct CoefMetrics {
    std::string estimator;
    int category = 0;
    int coef = 0;
    std::string name;
    double truth = 0.0;
    int replications = 0;
    double mean = 0.0;
    double bias = 0.0;
    double abs_bias = 0.0;
    double rmse = 0.0;
    double mc_sd = 0.0;
    double mean_se = 0.0;
    double coverage = 0.0;
};

/// Averages of CoefMetrics over slopes; category 0 pools all categories.
struct SummaryMetrics {
    std::string estimator;
    int category = 0;
    double rmse = 0.0;
    double abs_bias = 0.0;
    double coverage = 0.0;
    double mean_se = 0.0;
    double mc_sd = 0.0;
};

struct MetricsTable {
    std::string dgp;
    Index n = 0;
    int replications = 0;
    int K = 0;
    std::vector<std::string> estimators;
    std::vector<CoefMetrics> coefs;
    std::vector<SummaryMetrics> summary;
    std::map<std::string, int> failures;

    [[nodiscard]] const SummaryMetrics& at(std::string_view estimator, int category) const;
    [[nodiscard]] std::string to_csv() const;
    [[nodiscard]] std::string summary_csv() const;
    [[nodiscard]] std::string to_text() const;
};

/// Per-estimator replication draws: beta and robust SE for each category.
struct ReplicationDraw {
    bool ok = false;
    std::string error;
    std::vector<VectorXd> beta;
    std::vector<VectorXd> se;
};

/// draws[r][e] for replication r and estimator e.
using StudyDraws = std::vector<std::vector<ReplicationDraw>>;

/// Runs the replications without aggregating.
StudyDraws simulate_draws(const SimConfig& cfg, std::vector<Estimator>& menu);

/// Aggregates draws into metrics; throws StudyFailed when any estimator's
/// failure rate exceeds cfg.max_failure_rate.
MetricsTable summarize(const SimConfig& cfg, const std::vector<Estimator>& menu,
                       const StudyDraws& draws);

MetricsTable run_study(const SimConfig& cfg);

/// Pairs bootstrap refitting both stages. Resamples that fail to fit are
/// skipped and counted.
struct BootstrapResult {
    std::vector<VectorXd> se;  // entry k-1
    std::vector<MatrixXd> draws;  // entry k-1: B_ok x d_x
    int failed = 0;
};

BootstrapResult bootstrap_se(const Dataset& ds, const Pipeline& p, int B, std::uint64_t seed);

struct BootstrapRow {
    int category = 0;
    int coef = 0;
    std::string name;
    double mc_sd = 0.0;
    double mean_hc_se = 0.0;
    double mean_boot_se = 0.0;
};

struct BootstrapTable {
    std::string dgp;
    std::string estimator;
    Index n = 0;
    int replications = 0;
    int B = 0;
    int failed_replications = 0;
    int failed_resamples = 0;
    std::vector<BootstrapRow> rows;
    double hc_over_boot = 0.0;     // mean HC SE / mean bootstrap SE
    double boot_over_mcsd = 0.0;   // mean bootstrap SE / mean MC SD

    [[nodiscard]] std::string to_csv() const;
    [[nodiscard]] std::string to_text() const;
};

/// Validation study: per replication the HC SE and the bootstrap SE of a
/// single feasible estimator (cfg.estimators must name exactly one).
BootstrapTable run_bootstrap_study(const SimConfig& cfg);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace mlsel
