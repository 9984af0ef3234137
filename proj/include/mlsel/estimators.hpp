#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlsel/dgp.hpp"
#include "mlsel/second_stage.hpp"

namespace mlsel {

/// Selection architecture of the first stage.
enum class Architecture { None, OrderedParametric, OrderedNonparametric, Mnl };

std::string_view architecture_name(Architecture a);
Architecture parse_architecture(std::string_view s);

/// A complete two-step recipe: first-stage model and design, then controls.
struct Pipeline {
    Architecture arch = Architecture::None;
    SieveSpec first_stage;
    bool linear_index = false;
    ControlSpec control;
    OptOptions opt;
};

/// Fitted first stage plus the design it was fit on.
struct FirstStage {
    MatrixXd design;
    FirstStageFit fit;
};

FirstStage fit_first_stage(const Dataset& ds, const Pipeline& p);

/// Second-stage fits for k = 1..K (entry k-1) given a fitted first stage.
std::vector<FitResult> fit_second_stages(const Dataset& ds, const FirstStage& fs,
                                         const ControlSpec& control);

std::vector<FitResult> fit_pipeline(const Dataset& ds, const Pipeline& p);

/// Simulation estimator menu.
enum class Estimator { Ols, Linear, Oracle, Sieve, Mlogit, ExchL2 };

std::string_view estimator_name(Estimator e);
Estimator parse_estimator(std::string_view s);
std::vector<Estimator> default_estimators(Family f, int dgp);

/// Design knobs shared by all simulation estimators.
struct EstimatorOptions {
    SieveSpec first_stage;
    SieveSpec second_stage;
    OptOptions opt;
};

/// First-stage defaults used by the simulation designs: cubic-polynomial
/// pairwise tensors and categorical interactions for ordered DGP2. Designs with
/// three continuous covariates use quadratic splines with two interior knots.
EstimatorOptions simulation_options(const DgpId& id);

/// Feasible recipe behind an estimator (Oracle has none).
Pipeline pipeline_for(Estimator e, Family f, const EstimatorOptions& o);

struct EstimatorOutcome {
    Estimator estimator = Estimator::Ols;
    std::vector<FitResult> fits;
    std::optional<std::string> error;
};

/// Runs every requested estimator on one simulated sample; first stages are
/// shared between estimators with the same recipe. Errors are captured per
/// estimator.
std::vector<EstimatorOutcome> estimate_all(const SimDataset& sd,
                                           const std::vector<Estimator>& menu,
                                           const EstimatorOptions& o);

}  // namespace mlsel
