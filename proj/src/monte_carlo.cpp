#include "mlsel/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "mlsel/error.hpp"

namespace mlsel {

namespace {

template <typename Fn>
void parallel_for(int count, int threads, Fn fn)
{
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

bool needs_true_probs(const DgpId& id, const std::vector<Estimator>& menu)
{
    return id.family == Family::Multinomial && id.number >= 3 &&
           std::find(menu.begin(), menu.end(), Estimator::Oracle) != menu.end();
}

std::string pad(const std::string& s, size_t w)
{
    return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

std::string fixed(double v, int prec = 3)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << v;
    return os.str();
}

}  // namespace

std::string format_double(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::uint64_t replication_seed(std::uint64_t base, std::uint64_t rep, std::uint32_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(base & 0xffffffffu),
                      static_cast<std::uint32_t>(base >> 32),
                      static_cast<std::uint32_t>(rep), stream};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

StudyDraws simulate_draws(const SimConfig& cfg, std::vector<Estimator>& menu)
{
    if (cfg.replications < 1) throw Error(ErrorCode::Config, "replications must be >= 1");
    if (cfg.n < 100) throw Error(ErrorCode::Config, "n must be >= 100");
    menu = cfg.estimators.empty() ? default_estimators(cfg.dgp.family, cfg.dgp.number)
                                  : cfg.estimators;
    for (Estimator e : menu)
        if (e != Estimator::Oracle) (void)pipeline_for(e, cfg.dgp.family, cfg.options);
    const bool probs = needs_true_probs(cfg.dgp, menu);

    StudyDraws draws(static_cast<size_t>(cfg.replications));
    parallel_for(cfg.replications, cfg.threads, [&](int r) {
        auto& row = draws[static_cast<size_t>(r)];
        row.assign(menu.size(), ReplicationDraw{});
        try {
            const SimDataset sd = generate(cfg.dgp, cfg.n,
                                           replication_seed(cfg.seed, static_cast<std::uint64_t>(r),
                                                            kStreamData),
                                           cfg.delta, probs);
            const auto outcomes = estimate_all(sd, menu, cfg.options);
            for (size_t e = 0; e < menu.size(); ++e) {
                auto& dr = row[e];
                if (outcomes[e].error) {
                    dr.error = *outcomes[e].error;
                    continue;
                }
                dr.ok = true;
                for (const auto& f : outcomes[e].fits) {
                    dr.beta.push_back(f.beta);
                    dr.se.push_back(f.se_robust());
                }
            }
        } catch (const Error& err) {
            for (auto& dr : row) dr.error = std::string(code_name(err.code())) + ": " + err.what();
        }
    });
    return draws;
}

MetricsTable summarize(const SimConfig& cfg, const std::vector<Estimator>& menu,
                       const StudyDraws& draws)
{
    // Truth comes from a tiny sample of the same design (slopes do not depend on n).
    const SimDataset truth = generate(cfg.dgp, 200, cfg.seed, cfg.delta, false);
    const int K = truth.data.K;

    MetricsTable t;
    t.dgp = cfg.dgp.name();
    t.n = cfg.n;
    t.replications = cfg.replications;
    t.K = K;
    for (size_t e = 0; e < menu.size(); ++e) {
        const std::string name(estimator_name(menu[e]));
        t.estimators.push_back(name);
        int failed = 0;
        std::string first_error;
        for (const auto& row : draws)
            if (!row[e].ok) {
                ++failed;
                if (first_error.empty()) first_error = row[e].error;
            }
        t.failures[name] = failed;
        if (static_cast<double>(failed) > cfg.max_failure_rate * cfg.replications)
            throw Error(ErrorCode::StudyFailed,
                        name + " failed in " + std::to_string(failed) + " of " +
                            std::to_string(cfg.replications) + " replications (" + first_error +
                            ")");

        std::vector<SummaryMetrics> per_cat(static_cast<size_t>(K) + 1);
        int pooled = 0;
        for (int k = 1; k <= K; ++k) {
            const VectorXd& b0 = truth.beta[static_cast<size_t>(k - 1)];
            auto& s = per_cat[static_cast<size_t>(k)];
            for (Index j = 0; j < b0.size(); ++j) {
                CoefMetrics m;
                m.estimator = name;
                m.category = k;
                m.coef = static_cast<int>(j);
                m.name = truth.data.names[static_cast<size_t>(j)];
                m.truth = b0(j);
                double sum = 0.0, sum_sq = 0.0, sum_se = 0.0, hits = 0.0;
                for (const auto& row : draws) {
                    const auto& dr = row[e];
                    if (!dr.ok) continue;
                    const double b = dr.beta[static_cast<size_t>(k - 1)](j);
                    const double se = dr.se[static_cast<size_t>(k - 1)](j);
                    ++m.replications;
                    sum += b;
                    sum_sq += (b - m.truth) * (b - m.truth);
                    sum_se += se;
                    if (std::abs(b - m.truth) <= kCritical95 * se) hits += 1.0;
                }
                const double R = std::max(1, m.replications);
                m.mean = sum / R;
                m.bias = m.mean - m.truth;
                m.abs_bias = std::abs(m.bias);
                m.rmse = std::sqrt(sum_sq / R);
                m.mean_se = sum_se / R;
                m.coverage = hits / R;
                double var = 0.0;
                for (const auto& row : draws) {
                    const auto& dr = row[e];
                    if (!dr.ok) continue;
                    const double dv = dr.beta[static_cast<size_t>(k - 1)](j) - m.mean;
                    var += dv * dv;
                }
                m.mc_sd = m.replications > 1 ? std::sqrt(var / (m.replications - 1)) : 0.0;

                for (auto* acc : {&s, &per_cat[0]}) {
                    acc->rmse += m.rmse;
                    acc->abs_bias += m.abs_bias;
                    acc->coverage += m.coverage;
                    acc->mean_se += m.mean_se;
                    acc->mc_sd += m.mc_sd;
                }
                ++pooled;
                t.coefs.push_back(std::move(m));
            }
            const double nb = static_cast<double>(b0.size());
            s.rmse /= nb;
            s.abs_bias /= nb;
            s.coverage /= nb;
            s.mean_se /= nb;
            s.mc_sd /= nb;
        }
        auto& all = per_cat[0];
        all.rmse /= pooled;
        all.abs_bias /= pooled;
        all.coverage /= pooled;
        all.mean_se /= pooled;
        all.mc_sd /= pooled;
        for (int k = 0; k <= K; ++k) {
            per_cat[static_cast<size_t>(k)].estimator = name;
            per_cat[static_cast<size_t>(k)].category = k;
            t.summary.push_back(per_cat[static_cast<size_t>(k)]);
        }
    }
    return t;
}

MetricsTable run_study(const SimConfig& cfg)
{
    std::vector<Estimator> menu;
    const auto draws = simulate_draws(cfg, menu);
    return summarize(cfg, menu, draws);
}

const SummaryMetrics& MetricsTable::at(std::string_view estimator, int category) const
{
    for (const auto& s : summary)
        if (s.estimator == estimator && s.category == category) return s;
    throw Error(ErrorCode::InvalidArgument,
                "no metrics for " + std::string(estimator) + " category " +
                    std::to_string(category));
}

std::string MetricsTable::to_csv() const
{
    std::ostringstream os;
    os << "estimator,category,coefficient,name,truth,replications,mean,bias,abs_bias,rmse,mc_sd,"
          "mean_se,coverage\n";
    for (const auto& m : coefs)
        os << m.estimator << ',' << m.category << ',' << m.coef << ',' << m.name << ','
           << format_double(m.truth) << ',' << m.replications << ',' << format_double(m.mean)
           << ',' << format_double(m.bias) << ',' << format_double(m.abs_bias) << ','
           << format_double(m.rmse) << ',' << format_double(m.mc_sd) << ','
           << format_double(m.mean_se) << ',' << format_double(m.coverage) << '\n';
    return os.str();
}

std::string MetricsTable::summary_csv() const
{
    std::ostringstream os;
    os << "estimator,category,rmse,abs_bias,coverage,mean_se,mc_sd,failures\n";
    for (const auto& s : summary)
        os << s.estimator << ',' << (s.category == 0 ? std::string("all")
                                                     : std::to_string(s.category))
           << ',' << format_double(s.rmse) << ',' << format_double(s.abs_bias) << ','
           << format_double(s.coverage) << ',' << format_double(s.mean_se) << ','
           << format_double(s.mc_sd) << ',' << failures.at(s.estimator) << '\n';
    return os.str();
}

std::string MetricsTable::to_text() const
{
    std::ostringstream os;
    os << dgp << "  n = " << n << "  R = " << replications << "\n";
    os << pad("", 10);
    for (int k = 1; k <= K; ++k) os << pad("Occ." + std::to_string(k), 24);
    os << pad("All", 24) << pad("fail", 6) << "\n";
    os << pad("", 10);
    for (int k = 0; k <= K; ++k) os << pad("RMSE", 8) << pad("|Bias|", 8) << pad("Cov", 8);
    os << "\n";
    for (const auto& e : estimators) {
        os << std::left << std::setw(10) << e << std::right;
        auto cell = [&](int k) {
            const auto& s = at(e, k);
            os << pad(fixed(s.rmse), 8) << pad(fixed(s.abs_bias), 8) << pad(fixed(s.coverage), 8);
        };
        for (int k = 1; k <= K; ++k) cell(k);
        cell(0);
        os << pad(std::to_string(failures.at(e)), 6) << "\n";
    }
    return os.str();
}

BootstrapResult bootstrap_se(const Dataset& ds, const Pipeline& p, int B, std::uint64_t seed)
{
    if (B < 2) throw Error(ErrorCode::InvalidArgument, "bootstrap needs B >= 2");
    const Index n = ds.n();
    BootstrapResult br;
    std::vector<std::vector<VectorXd>> kept;
    for (int b = 0; b < B; ++b) {
        auto eng = make_engine(replication_seed(seed, static_cast<std::uint64_t>(b),
                                                kStreamBootstrap));
        std::uniform_int_distribution<Index> pick(0, n - 1);
        std::vector<Index> rows(static_cast<size_t>(n));
        for (auto& r : rows) r = pick(eng);
        try {
            const Dataset bs = take_rows(ds, rows);
            const auto fits = fit_pipeline(bs, p);
            std::vector<VectorXd> betas;
            for (const auto& f : fits) betas.push_back(f.beta);
            kept.push_back(std::move(betas));
        } catch (const Error&) {
            ++br.failed;
        }
    }
    if (kept.size() < 2)
        throw Error(ErrorCode::StudyFailed, "fewer than two bootstrap resamples could be fit");
    for (int k = 0; k < ds.K; ++k) {
        const Index dx = kept[0][static_cast<size_t>(k)].size();
        MatrixXd m(static_cast<Index>(kept.size()), dx);
        for (size_t b = 0; b < kept.size(); ++b)
            m.row(static_cast<Index>(b)) = kept[b][static_cast<size_t>(k)].transpose();
        const VectorXd mean = m.colwise().mean().transpose();
        const VectorXd var = (m.rowwise() - mean.transpose()).colwise().squaredNorm().transpose() /
                             static_cast<double>(m.rows() - 1);
        br.se.push_back(var.cwiseSqrt());
        br.draws.push_back(std::move(m));
    }
    return br;
}

BootstrapTable run_bootstrap_study(const SimConfig& cfg)
{
    if (cfg.estimators.size() != 1)
        throw Error(ErrorCode::Config, "bootstrap study needs exactly one estimator");
    const Estimator est = cfg.estimators.front();
    if (est == Estimator::Oracle)
        throw Error(ErrorCode::Config, "the Oracle estimator cannot be bootstrapped");
    if (cfg.bootstrap_b < 2) throw Error(ErrorCode::Config, "bootstrap_b must be >= 2");
    if (cfg.replications < 2) throw Error(ErrorCode::Config, "bootstrap study needs R >= 2");
    const Pipeline p = pipeline_for(est, cfg.dgp.family, cfg.options);

    struct Rep {
        bool ok = false;
        std::vector<VectorXd> beta, hc, boot;
        int failed = 0;
    };
    std::vector<Rep> reps(static_cast<size_t>(cfg.replications));
    parallel_for(cfg.replications, cfg.threads, [&](int r) {
        auto& rep = reps[static_cast<size_t>(r)];
        const std::uint64_t s = replication_seed(cfg.seed, static_cast<std::uint64_t>(r),
                                                 kStreamData);
        try {
            const SimDataset sd = generate(cfg.dgp, cfg.n, s, cfg.delta, false);
            const auto fits = fit_pipeline(sd.data, p);
            const auto br = bootstrap_se(sd.data, p, cfg.bootstrap_b, s);
            for (const auto& f : fits) {
                rep.beta.push_back(f.beta);
                rep.hc.push_back(f.se_robust());
            }
            rep.boot = br.se;
            rep.failed = br.failed;
            rep.ok = true;
        } catch (const Error&) {
        }
    });

    BootstrapTable t;
    t.dgp = cfg.dgp.name();
    t.estimator = std::string(estimator_name(est));
    t.n = cfg.n;
    t.replications = cfg.replications;
    t.B = cfg.bootstrap_b;
    std::vector<const Rep*> good;
    for (const auto& r : reps) {
        if (r.ok) {
            good.push_back(&r);
            t.failed_resamples += r.failed;
        } else {
            ++t.failed_replications;
        }
    }
    if (good.size() < 2 ||
        static_cast<double>(t.failed_replications) > cfg.max_failure_rate * cfg.replications)
        throw Error(ErrorCode::StudyFailed, "bootstrap study: too many failed replications");

    const SimDataset truth = generate(cfg.dgp, 200, cfg.seed, cfg.delta, false);
    double sum_hc = 0.0, sum_boot = 0.0, sum_sd = 0.0;
    const auto G = static_cast<double>(good.size());
    for (size_t k = 0; k < good[0]->beta.size(); ++k) {
        for (Index j = 0; j < good[0]->beta[k].size(); ++j) {
            BootstrapRow row;
            row.category = static_cast<int>(k) + 1;
            row.coef = static_cast<int>(j);
            row.name = truth.data.names[static_cast<size_t>(j)];
            double mean = 0.0;
            for (const Rep* r : good) {
                mean += r->beta[k](j);
                row.mean_hc_se += r->hc[k](j);
                row.mean_boot_se += r->boot[k](j);
            }
            mean /= G;
            row.mean_hc_se /= G;
            row.mean_boot_se /= G;
            double var = 0.0;
            for (const Rep* r : good) var += (r->beta[k](j) - mean) * (r->beta[k](j) - mean);
            row.mc_sd = std::sqrt(var / (G - 1.0));
            sum_hc += row.mean_hc_se;
            sum_boot += row.mean_boot_se;
            sum_sd += row.mc_sd;
            t.rows.push_back(std::move(row));
        }
    }
    t.hc_over_boot = sum_hc / sum_boot;
    t.boot_over_mcsd = sum_boot / sum_sd;
    return t;
}

std::string BootstrapTable::to_csv() const
{
    std::ostringstream os;
    os << "category,coefficient,name,mc_sd,mean_hc_se,mean_boot_se,hc_over_boot\n";
    for (const auto& r : rows)
        os << r.category << ',' << r.coef << ',' << r.name << ',' << format_double(r.mc_sd) << ','
           << format_double(r.mean_hc_se) << ',' << format_double(r.mean_boot_se) << ','
           << format_double(r.mean_hc_se / r.mean_boot_se) << '\n';
    os << "all,,," << "," << "," << "," << format_double(hc_over_boot) << '\n';
    return os.str();
}

std::string BootstrapTable::to_text() const
{
    std::ostringstream os;
    os << dgp << "  " << estimator << "  n = " << n << "  R = " << replications << "  B = " << B
       << "\n";
    os << pad("Occ", 5) << pad("coef", 6) << pad("MC SD", 10) << pad("HC SE", 10)
       << pad("Boot SE", 10) << pad("HC/Boot", 10) << "\n";
    for (const auto& r : rows)
        os << pad(std::to_string(r.category), 5) << pad(r.name, 6) << pad(fixed(r.mc_sd, 4), 10)
           << pad(fixed(r.mean_hc_se, 4), 10) << pad(fixed(r.mean_boot_se, 4), 10)
           << pad(fixed(r.mean_hc_se / r.mean_boot_se), 10) << "\n";
    os << "mean HC SE / mean bootstrap SE = " << fixed(hc_over_boot) << "\n";
    os << "mean bootstrap SE / mean MC SD = " << fixed(boot_over_mcsd) << "\n";
    os << "failed replications " << failed_replications << ", failed resamples "
       << failed_resamples << "\n";
    return os.str();
}

}  // namespace mlsel
