#pragma once

#include <string>

#include "mlsel/linalg.hpp"

namespace mlsel {

/// Category-level inputs for two groups A and B.
struct GroupStats {
    VectorXd mean_a, mean_b;    // mean outcome by category
    VectorXd share_a, share_b;  // category shares, each summing to one
    VectorXd beta;              // group coefficient by category

    void validate() const;
};

struct Decomposition {
    double raw = 0.0;
    double structural_within = 0.0;
    double covariate_composition = 0.0;
    double between_sorting = 0.0;
};

Decomposition decompose(const GroupStats& gs);

/// CSV with header category,mean_a,mean_b,share_a,share_b,beta.
GroupStats load_group_stats(const std::string& path);
void write_group_stats(const std::string& path, const GroupStats& gs);

std::string decomposition_csv(const Decomposition& d);
std::string decomposition_text(const Decomposition& d);

}  // namespace mlsel
