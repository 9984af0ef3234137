#pragma once

#include <string>
#include <vector>

#include "mlsel/linalg.hpp"

namespace mlsel {

enum class ColumnKind { Continuous, Categorical };

/// Selection sample: covariates for everyone, category D in 0..K, and an
/// outcome that is observed (finite) exactly when D >= 1.
struct Dataset {
    MatrixXd X;
    std::vector<std::string> names;
    std::vector<ColumnKind> kinds;
    Eigen::VectorXi d;
    VectorXd y;  // NaN when D = 0
    int K = 0;

    [[nodiscard]] Index n() const noexcept { return d.size(); }
    [[nodiscard]] std::vector<Index> rows_in(int k) const;
    [[nodiscard]] std::vector<Index> continuous_columns() const;
    /// Throws DataInvalid when an invariant fails.
    void validate() const;
};

/// Column roles for CSV ingestion. Categorical columns are one-hot expanded
/// with the first (sorted) level dropped; binary columns are taken as already
/// coded indicators.
struct Schema {
    std::string d_column = "D";
    std::string y_column = "Y";
    std::vector<std::string> continuous;
    std::vector<std::string> categorical;
    std::vector<std::string> binary;
};

Dataset load_dataset(const std::string& path, const Schema& schema);

/// Writes D, Y and every covariate column; returns the schema that reloads it.
Schema write_dataset(const std::string& path, const Dataset& ds);

/// Resampled copy (rows in the given order).
Dataset take_rows(const Dataset& ds, const std::vector<Index>& rows);

}  // namespace mlsel
