#include <CLI11.hpp>
#include <iostream>

#include "mlsel/error.hpp"
#include "mlsel/execute.hpp"

namespace {

int exit_status(mlsel::ErrorCode c)
{
    using mlsel::ErrorCode;
    switch (c) {
    case ErrorCode::IoNotFound:
    case ErrorCode::IoFormat: return 2;
    case ErrorCode::InvalidArgument:
    case ErrorCode::Config: return 3;
    case ErrorCode::DataInvalid: return 4;
    case ErrorCode::StudyFailed: return 6;
    default: return 5;
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Two-step sieve estimation of multilayered sample-selection models"};
    app.require_subcommand(1);

    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string out_dir;
    std::vector<std::string> settings;
    bool quiet = false;

    for (const char* name : {"simulate", "fit", "bootstrap", "decompose"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("-c,--config", config, "key = value configuration file");
        sub->add_option("--seed", seed, "override the seed");
        sub->add_option("--threads", threads, "worker threads for replications");
        sub->add_option("-o,--out", out_dir, "output directory");
        sub->add_option("-s,--set", settings, "extra key=value setting (repeatable)");
        sub->add_flag("-q,--quiet", quiet, "do not print the result table");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "E_INVALID_ARGUMENT: " << e.what() << "\n";
        return 3;
    }

    try {
        mlsel::RunConfig cfg;
        if (!config.empty()) cfg = mlsel::load_config(config);
        cfg.mode = mlsel::parse_mode(app.get_subcommands().front()->get_name());
        for (const auto& kv : settings) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw mlsel::Error(mlsel::ErrorCode::Config, "--set expects key=value");
            cfg = mlsel::parse_config(kv, cfg);
        }
        if (seed) cfg.seed = *seed;
        if (threads) cfg.threads = *threads;
        if (!out_dir.empty()) cfg.out_dir = out_dir;

        const auto out = mlsel::execute(cfg);
        if (!quiet) std::cout << out.text;
        for (const auto& f : out.files) std::cerr << "wrote " << f << "\n";
    } catch (const mlsel::Error& e) {
        std::cerr << mlsel::code_name(e.code()) << ": " << e.what() << "\n";
        return exit_status(e.code());
    } catch (const std::exception& e) {
        std::cerr << "E_INTERNAL: " << e.what() << "\n";
        return 70;
    }
    return 0;
}
