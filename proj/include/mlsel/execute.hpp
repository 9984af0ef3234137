#pragma once

#include <string>
#include <vector>

#include "mlsel/config.hpp"

namespace mlsel {

struct RunOutput {
    std::vector<std::string> files;
    std::string text;  // human-readable table of the main result
};

/// Runs one configured job, writing its tables and manifest.txt under cfg.out_dir.
RunOutput execute(const RunConfig& cfg);

/// Per-category coefficient report of a fitted pipeline.
std::string fit_report_csv(const Dataset& ds, const std::vector<FitResult>& fits);
std::string fit_report_text(const Dataset& ds, const std::vector<FitResult>& fits);

}  // namespace mlsel
