#include "mlsel/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "mlsel/design.hpp"
#include "mlsel/error.hpp"

namespace mlsel {

namespace {

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

std::string_view architecture_name(Architecture a)
{
    switch (a) {
    case Architecture::None: return "none";
    case Architecture::OrderedParametric: return "ordered-parametric";
    case Architecture::OrderedNonparametric: return "ordered-nonparametric";
    case Architecture::Mnl: return "mnl";
    }
    return "?";
}

Architecture parse_architecture(std::string_view s)
{
    for (auto a : {Architecture::None, Architecture::OrderedParametric,
                   Architecture::OrderedNonparametric, Architecture::Mnl})
        if (architecture_name(a) == s) return a;
    throw Error(ErrorCode::Config, "unknown architecture '" + std::string(s) + "'");
}

FirstStage fit_first_stage(const Dataset& ds, const Pipeline& p)
{
    FirstStage fs;
    switch (p.arch) {
    case Architecture::None:
        fs.design = MatrixXd(ds.n(), 0);
        return fs;
    case Architecture::OrderedParametric:
        fs.design = build_first_stage_design(ds, p.first_stage, p.linear_index);
        fs.fit = fit_ordered(ds.d, fs.design, ds.K, p.opt);
        return fs;
    case Architecture::OrderedNonparametric:
        fs.design = with_intercept(build_first_stage_design(ds, p.first_stage, p.linear_index));
        fs.fit = fit_thresholds(ds.d, fs.design, ds.K, p.opt);
        return fs;
    case Architecture::Mnl:
        fs.design = with_intercept(build_first_stage_design(ds, p.first_stage, p.linear_index));
        fs.fit = fit_mnl(ds.d, fs.design, ds.K, p.opt);
        return fs;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown architecture");
}

std::vector<FitResult> fit_second_stages(const Dataset& ds, const FirstStage& fs,
                                         const ControlSpec& control)
{
    std::vector<FitResult> out;
    for (int k = 1; k <= ds.K; ++k) {
        const auto rows = ds.rows_in(k);
        const MatrixXd dk = select_rows(fs.design, rows);
        const MatrixXd c = build_controls(control, fs.fit, dk, k);
        out.push_back(fit_outcome(select_rows(ds.y, rows), select_rows(ds.X, rows), c, control));
    }
    return out;
}

std::vector<FitResult> fit_pipeline(const Dataset& ds, const Pipeline& p)
{
    ds.validate();
    return fit_second_stages(ds, fit_first_stage(ds, p), p.control);
}

std::string_view estimator_name(Estimator e)
{
    switch (e) {
    case Estimator::Ols: return "OLS";
    case Estimator::Linear: return "Linear";
    case Estimator::Oracle: return "Oracle";
    case Estimator::Sieve: return "Sieve";
    case Estimator::Mlogit: return "MLogit";
    case Estimator::ExchL2: return "Exch-L2";
    }
    return "?";
}

Estimator parse_estimator(std::string_view s)
{
    const std::string ls = lower(s);
    for (auto e : {Estimator::Ols, Estimator::Linear, Estimator::Oracle, Estimator::Sieve,
                   Estimator::Mlogit, Estimator::ExchL2})
        if (lower(estimator_name(e)) == ls) return e;
    throw Error(ErrorCode::Config, "unknown estimator '" + std::string(s) + "'");
}

std::vector<Estimator> default_estimators(Family f, int dgp)
{
    if (f == Family::Ordered)
        return {Estimator::Ols, Estimator::Linear, Estimator::Oracle, Estimator::Sieve};
    std::vector<Estimator> m{Estimator::Ols, Estimator::Mlogit, Estimator::Oracle, Estimator::Sieve};
    if (dgp >= 2) m.push_back(Estimator::ExchL2);
    return m;
}

EstimatorOptions simulation_options(const DgpId& id)
{
    EstimatorOptions o;
    o.first_stage.n_interior_tensor = 0;
    o.first_stage.categorical_interactions = id.family == Family::Ordered && id.number == 2;
    const bool three_continuous =
        id.family == Family::Multinomial ? id.number >= 2 : id.number == 3;
    if (three_continuous) {
        o.first_stage.order = 3;
        o.first_stage.n_interior = 2;
    }
    return o;
}

Pipeline pipeline_for(Estimator e, Family f, const EstimatorOptions& o)
{
    Pipeline p;
    p.first_stage = o.first_stage;
    p.opt = o.opt;
    p.control.sieve = o.second_stage;
    const bool ordered = f == Family::Ordered;
    switch (e) {
    case Estimator::Ols:
        p.arch = Architecture::None;
        p.control.variant = ControlVariant::None;
        return p;
    case Estimator::Linear:
        if (!ordered) break;
        p.arch = Architecture::OrderedParametric;
        p.linear_index = true;
        p.control.variant = ControlVariant::ParametricOrdered;
        return p;
    case Estimator::Sieve:
        if (ordered) {
            p.arch = Architecture::OrderedNonparametric;
            p.control.variant = ControlVariant::SieveOrdered;
        } else {
            p.arch = Architecture::Mnl;
            p.control.variant = ControlVariant::SieveProbs;
        }
        return p;
    case Estimator::Mlogit:
        if (ordered) break;
        p.arch = Architecture::Mnl;
        p.control.variant = ControlVariant::MlogitIv;
        p.control.linear = true;
        return p;
    case Estimator::ExchL2:
        if (ordered) break;
        p.arch = Architecture::Mnl;
        p.control.variant = ControlVariant::ExchL;
        p.control.L = 2;
        return p;
    case Estimator::Oracle:
        throw Error(ErrorCode::InvalidArgument, "the Oracle estimator has no feasible pipeline");
    }
    throw Error(ErrorCode::Config, "estimator " + std::string(estimator_name(e)) +
                                       " does not apply to this model family");
}

namespace {

ControlSpec oracle_spec(const SimDataset& sd, const EstimatorOptions& o)
{
    ControlSpec cs;
    cs.sieve = o.second_stage;
    if (sd.dgp.family == Family::Ordered) {
        cs.variant = ControlVariant::ParametricOrdered;
    } else if (sd.dgp.number <= 2) {
        cs.variant = ControlVariant::MlogitIv;
        cs.linear = true;
    } else {
        cs.variant = ControlVariant::SieveProbs;
    }
    return cs;
}

std::vector<FitResult> fit_oracle(const SimDataset& sd, const EstimatorOptions& o)
{
    const auto& ds = sd.data;
    const ControlSpec cs = oracle_spec(sd, o);
    std::vector<FitResult> out;
    for (int k = 1; k <= ds.K; ++k) {
        const auto rows = ds.rows_in(k);
        out.push_back(fit_outcome(select_rows(ds.y, rows), select_rows(ds.X, rows),
                                  oracle_controls(sd, k), cs));
    }
    return out;
}

}  // namespace

std::vector<EstimatorOutcome> estimate_all(const SimDataset& sd,
                                           const std::vector<Estimator>& menu,
                                           const EstimatorOptions& o)
{
    struct Cached {
        std::optional<FirstStage> fs;
        std::string error;
    };
    std::map<std::pair<int, bool>, Cached> cache;
    std::vector<EstimatorOutcome> out;
    for (Estimator e : menu) {
        EstimatorOutcome eo;
        eo.estimator = e;
        try {
            if (e == Estimator::Oracle) {
                eo.fits = fit_oracle(sd, o);
            } else {
                const Pipeline p = pipeline_for(e, sd.dgp.family, o);
                const auto key = std::make_pair(static_cast<int>(p.arch), p.linear_index);
                auto it = cache.find(key);
                if (it == cache.end()) {
                    Cached c;
                    try {
                        c.fs = fit_first_stage(sd.data, p);
                    } catch (const Error& err) {
                        c.error = std::string(code_name(err.code())) + ": " + err.what();
                    }
                    it = cache.emplace(key, std::move(c)).first;
                }
                if (!it->second.fs) {
                    eo.error = it->second.error;
                } else {
                    eo.fits = fit_second_stages(sd.data, *it->second.fs, p.control);
                }
            }
        } catch (const Error& err) {
            eo.error = std::string(code_name(err.code())) + ": " + err.what();
        }
        out.push_back(std::move(eo));
    }
    return out;
}

}  // namespace mlsel
