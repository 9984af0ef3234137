#include "mlsel/execute.hpp"

#include <Eigen/Core>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mlsel/decomposition.hpp"
#include "mlsel/error.hpp"

namespace mlsel {

namespace {

std::string write_file(const std::filesystem::path& dir, const std::string& name,
                       const std::string& body)
{
    const auto path = dir / name;
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoNotFound, "cannot write " + path.string());
    out << body;
    if (!out) throw Error(ErrorCode::IoFormat, "write failed: " + path.string());
    return path.string();
}

std::string bootstrap_fit_csv(const Dataset& ds, const std::vector<FitResult>& fits,
                              const BootstrapResult& br)
{
    std::ostringstream os;
    os << "category,coefficient,name,beta,se_robust,se_bootstrap,robust_over_bootstrap\n";
    for (size_t k = 0; k < fits.size(); ++k) {
        const VectorXd se = fits[k].se_robust();
        for (Index j = 0; j < se.size(); ++j)
            os << k + 1 << ',' << j << ',' << ds.names[static_cast<size_t>(j)] << ','
               << format_double(fits[k].beta(j)) << ',' << format_double(se(j)) << ','
               << format_double(br.se[k](j)) << ',' << format_double(se(j) / br.se[k](j)) << '\n';
    }
    return os.str();
}

}  // namespace

std::string fit_report_csv(const Dataset& ds, const std::vector<FitResult>& fits)
{
    std::ostringstream os;
    os << "category,coefficient,name,beta,se_robust,se_homoskedastic,n_k,kappa,condition_number,"
          "dropped_columns,clamped_points\n";
    for (size_t k = 0; k < fits.size(); ++k) {
        const auto& f = fits[k];
        const VectorXd rob = f.se_robust();
        const VectorXd hom = f.se_homoskedastic();
        for (Index j = 0; j < f.beta.size(); ++j)
            os << k + 1 << ',' << j << ',' << ds.names[static_cast<size_t>(j)] << ','
               << format_double(f.beta(j)) << ',' << format_double(rob(j)) << ','
               << format_double(hom(j)) << ',' << f.n << ',' << f.kappa << ','
               << format_double(f.condition_number) << ',' << f.dropped.size() << ','
               << f.clamped << '\n';
    }
    return os.str();
}

std::string fit_report_text(const Dataset& ds, const std::vector<FitResult>& fits)
{
    std::ostringstream os;
    os << std::fixed;
    for (size_t k = 0; k < fits.size(); ++k) {
        const auto& f = fits[k];
        os << "category " << k + 1 << "  n_k = " << f.n << "  kappa = " << f.kappa
           << "  cond = " << std::setprecision(3) << std::scientific << f.condition_number
           << std::fixed << "  dropped = " << f.dropped.size() << "\n";
        os << std::left << std::setw(14) << "  coef" << std::right << std::setw(12) << "beta"
           << std::setw(12) << "robust SE" << std::setw(12) << "homo SE" << "\n";
        const VectorXd rob = f.se_robust();
        const VectorXd hom = f.se_homoskedastic();
        for (Index j = 0; j < f.beta.size(); ++j)
            os << "  " << std::left << std::setw(12) << ds.names[static_cast<size_t>(j)]
               << std::right << std::setprecision(4) << std::setw(12) << f.beta(j)
               << std::setw(12) << rob(j) << std::setw(12) << hom(j) << "\n";
    }
    return os.str();
}

RunOutput execute(const RunConfig& raw)
{
    const auto start = std::chrono::steady_clock::now();
    const RunConfig cfg = resolve(raw);
    const std::filesystem::path dir(cfg.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoNotFound, "cannot create output directory " + cfg.out_dir);

    RunOutput out;
    switch (cfg.mode) {
    case Mode::Simulate: {
        const MetricsTable t = run_study(to_sim_config(cfg));
        out.files.push_back(write_file(dir, "metrics.csv", t.to_csv()));
        out.files.push_back(write_file(dir, "summary.csv", t.summary_csv()));
        out.text = t.to_text();
        out.files.push_back(write_file(dir, "metrics.txt", out.text));
        break;
    }
    case Mode::Fit: {
        if (cfg.input.empty()) throw Error(ErrorCode::Config, "fit needs an input file");
        const Dataset ds = load_dataset(cfg.input, cfg.schema);
        const auto fits = fit_pipeline(ds, to_pipeline(cfg));
        out.files.push_back(write_file(dir, "fit_report.csv", fit_report_csv(ds, fits)));
        out.text = fit_report_text(ds, fits);
        out.files.push_back(write_file(dir, "fit_report.txt", out.text));
        break;
    }
    case Mode::Bootstrap: {
        if (cfg.input.empty()) {
            const BootstrapTable t = run_bootstrap_study(to_sim_config(cfg));
            out.files.push_back(write_file(dir, "bootstrap.csv", t.to_csv()));
            out.text = t.to_text();
        } else {
            const Dataset ds = load_dataset(cfg.input, cfg.schema);
            const Pipeline p = to_pipeline(cfg);
            const auto fits = fit_pipeline(ds, p);
            const auto br = bootstrap_se(ds, p, cfg.bootstrap_b, cfg.seed);
            const std::string csv = bootstrap_fit_csv(ds, fits, br);
            out.files.push_back(write_file(dir, "bootstrap.csv", csv));
            out.text = csv;
        }
        out.files.push_back(write_file(dir, "bootstrap.txt", out.text));
        break;
    }
    case Mode::Decompose: {
        if (cfg.input.empty()) throw Error(ErrorCode::Config, "decompose needs an input file");
        const Decomposition d = decompose(load_group_stats(cfg.input));
        out.files.push_back(write_file(dir, "decomposition.csv", decomposition_csv(d)));
        out.text = decomposition_text(d);
        out.files.push_back(write_file(dir, "decomposition.txt", out.text));
        break;
    }
    }

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream man;
    man << "# mlsel " << kVersion << "\n"
        << "# eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
        << EIGEN_MINOR_VERSION << "\n"
        << "# wall_time_seconds " << std::fixed << std::setprecision(3) << secs << "\n"
        << config_text(cfg);
    out.files.push_back(write_file(dir, "manifest.txt", man.str()));
    return out;
}

}  // namespace mlsel
