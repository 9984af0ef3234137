#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlsel/dataset.hpp"
#include "mlsel/estimators.hpp"
#include "mlsel/monte_carlo.hpp"

namespace mlsel {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Mode { Simulate, Fit, Bootstrap, Decompose };

std::string_view mode_name(Mode m);
Mode parse_mode(std::string_view s);

/// Everything a run needs. Unset optionals resolve to the defaults of the
/// chosen mode; the manifest records the resolved values.
struct RunConfig {
    Mode mode = Mode::Simulate;

    std::string dgp = "ordered1";
    Index n = 5000;
    int replications = 200;
    std::uint64_t seed = 20240611;
    double delta = 1.0;
    std::vector<std::string> estimators;
    int bootstrap_b = 0;
    int threads = 1;
    double max_failure_rate = 0.05;

    std::string input;
    Schema schema;
    std::string architecture = "ordered-nonparametric";
    std::string variant = "sieve-ordered";
    int exch_L = 2;
    bool linear_index = false;
    bool linear_controls = false;

    std::optional<int> fs_order;
    std::optional<int> fs_knots;
    std::optional<int> fs_tensor_knots;
    bool fs_full_tensor = false;
    std::optional<bool> fs_categorical_interactions;
    int ss_order = 4;
    std::optional<int> ss_knots;
    std::optional<int> ss_tensor_knots;
    bool ss_full_tensor = false;

    double gtol = 1e-8;
    int max_iter = 200;

    std::string out_dir = "out";
};

/// Applies one `key = value` setting; throws Config on unknown keys or bad values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Parses key = value lines; '#' starts a comment.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// Fills mode-dependent defaults (simulation first-stage knobs).
RunConfig resolve(RunConfig cfg);

/// Every key, one per line, in a form parse_config reads back.
std::string config_text(const RunConfig& cfg);

SimConfig to_sim_config(const RunConfig& cfg);
Pipeline to_pipeline(const RunConfig& cfg);

}  // namespace mlsel
