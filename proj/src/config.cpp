#include "mlsel/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mlsel/error.hpp"

namespace mlsel {

namespace {

std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value)
{
    throw Error(ErrorCode::Config,
                "invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

template <typename T>
T parse_number(std::string_view key, std::string_view v)
{
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
    return out;
}

bool parse_bool(std::string_view key, std::string_view v)
{
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, v);
}

std::optional<int> parse_auto_int(std::string_view key, std::string_view v)
{
    if (v == "auto") return std::nullopt;
    const int x = parse_number<int>(key, v);
    if (x < 0) bad_value(key, v);
    return x;
}

std::vector<std::string> parse_list(std::string_view v)
{
    std::vector<std::string> out;
    while (!v.empty()) {
        const auto c = v.find(',');
        const auto item = trim(v.substr(0, c));
        if (!item.empty()) out.emplace_back(item);
        if (c == std::string_view::npos) break;
        v.remove_prefix(c + 1);
    }
    return out;
}

std::string join(const std::vector<std::string>& v)
{
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

std::string auto_int(const std::optional<int>& v) { return v ? std::to_string(*v) : "auto"; }

bool is_study(const RunConfig& cfg)
{
    return cfg.mode == Mode::Simulate || (cfg.mode == Mode::Bootstrap && cfg.input.empty());
}

}  // namespace

std::string_view mode_name(Mode m)
{
    switch (m) {
    case Mode::Simulate: return "simulate";
    case Mode::Fit: return "fit";
    case Mode::Bootstrap: return "bootstrap";
    case Mode::Decompose: return "decompose";
    }
    return "?";
}

Mode parse_mode(std::string_view s)
{
    for (auto m : {Mode::Simulate, Mode::Fit, Mode::Bootstrap, Mode::Decompose})
        if (mode_name(m) == s) return m;
    throw Error(ErrorCode::Config, "unknown mode '" + std::string(s) + "'");
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view v)
{
    if (key == "mode") c.mode = parse_mode(v);
    else if (key == "dgp") c.dgp = std::string(v);
    else if (key == "n") c.n = parse_number<Index>(key, v);
    else if (key == "replications") c.replications = parse_number<int>(key, v);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
    else if (key == "delta") c.delta = parse_number<double>(key, v);
    else if (key == "estimators") c.estimators = parse_list(v);
    else if (key == "bootstrap_b") c.bootstrap_b = parse_number<int>(key, v);
    else if (key == "threads") c.threads = parse_number<int>(key, v);
    else if (key == "max_failure_rate") c.max_failure_rate = parse_number<double>(key, v);
    else if (key == "input") c.input = std::string(v);
    else if (key == "d_column") c.schema.d_column = std::string(v);
    else if (key == "y_column") c.schema.y_column = std::string(v);
    else if (key == "continuous") c.schema.continuous = parse_list(v);
    else if (key == "categorical") c.schema.categorical = parse_list(v);
    else if (key == "binary") c.schema.binary = parse_list(v);
    else if (key == "architecture") c.architecture = std::string(v);
    else if (key == "variant") c.variant = std::string(v);
    else if (key == "exch_L") c.exch_L = parse_number<int>(key, v);
    else if (key == "linear_index") c.linear_index = parse_bool(key, v);
    else if (key == "linear_controls") c.linear_controls = parse_bool(key, v);
    else if (key == "fs_order") c.fs_order = parse_auto_int(key, v);
    else if (key == "fs_knots") c.fs_knots = parse_auto_int(key, v);
    else if (key == "fs_tensor_knots") c.fs_tensor_knots = parse_auto_int(key, v);
    else if (key == "fs_full_tensor") c.fs_full_tensor = parse_bool(key, v);
    else if (key == "fs_categorical_interactions") {
        if (v == "auto") c.fs_categorical_interactions.reset();
        else c.fs_categorical_interactions = parse_bool(key, v);
    }
    else if (key == "ss_order") c.ss_order = parse_number<int>(key, v);
    else if (key == "ss_knots") c.ss_knots = parse_auto_int(key, v);
    else if (key == "ss_tensor_knots") c.ss_tensor_knots = parse_auto_int(key, v);
    else if (key == "ss_full_tensor") c.ss_full_tensor = parse_bool(key, v);
    else if (key == "gtol") c.gtol = parse_number<double>(key, v);
    else if (key == "max_iter") c.max_iter = parse_number<int>(key, v);
    else if (key == "out_dir") c.out_dir = std::string(v);
    else throw Error(ErrorCode::Config, "unknown configuration key '" + std::string(key) + "'");
}

RunConfig parse_config(std::string_view text, RunConfig base)
{
    int lineno = 0;
    while (!text.empty()) {
        ++lineno;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (const auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorCode::Config,
                        "line " + std::to_string(lineno) + ": expected key = value");
        apply_setting(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

RunConfig load_config(const std::string& path, RunConfig base)
{
    if (!std::filesystem::exists(path))
        throw Error(ErrorCode::IoNotFound, "config file not found: " + path);
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

RunConfig resolve(RunConfig cfg)
{
    if (is_study(cfg)) {
        const DgpId id = DgpId::parse(cfg.dgp);
        const EstimatorOptions o = simulation_options(id);
        if (!cfg.fs_order) cfg.fs_order = o.first_stage.order;
        if (!cfg.fs_knots) cfg.fs_knots = o.first_stage.n_interior;
        if (!cfg.fs_tensor_knots) cfg.fs_tensor_knots = o.first_stage.n_interior_tensor;
        if (!cfg.fs_categorical_interactions)
            cfg.fs_categorical_interactions = o.first_stage.categorical_interactions;
        if (cfg.mode == Mode::Bootstrap && cfg.estimators.empty())
            cfg.estimators = {id.family == Family::Ordered ? "Sieve" : "MLogit"};
        if (cfg.mode == Mode::Simulate && cfg.estimators.empty())
            for (Estimator e : default_estimators(id.family, id.number))
                cfg.estimators.emplace_back(estimator_name(e));
    }
    if (!cfg.fs_categorical_interactions) cfg.fs_categorical_interactions = false;
    if (cfg.threads < 1) throw Error(ErrorCode::Config, "threads must be >= 1");
    return cfg;
}

std::string config_text(const RunConfig& c)
{
    std::ostringstream os;
    os << "mode = " << mode_name(c.mode) << '\n'
       << "dgp = " << c.dgp << '\n'
       << "n = " << c.n << '\n'
       << "replications = " << c.replications << '\n'
       << "seed = " << c.seed << '\n'
       << "delta = " << format_double(c.delta) << '\n'
       << "estimators = " << join(c.estimators) << '\n'
       << "bootstrap_b = " << c.bootstrap_b << '\n'
       << "threads = " << c.threads << '\n'
       << "max_failure_rate = " << format_double(c.max_failure_rate) << '\n'
       << "input = " << c.input << '\n'
       << "d_column = " << c.schema.d_column << '\n'
       << "y_column = " << c.schema.y_column << '\n'
       << "continuous = " << join(c.schema.continuous) << '\n'
       << "categorical = " << join(c.schema.categorical) << '\n'
       << "binary = " << join(c.schema.binary) << '\n'
       << "architecture = " << c.architecture << '\n'
       << "variant = " << c.variant << '\n'
       << "exch_L = " << c.exch_L << '\n'
       << "linear_index = " << (c.linear_index ? "true" : "false") << '\n'
       << "linear_controls = " << (c.linear_controls ? "true" : "false") << '\n'
       << "fs_order = " << auto_int(c.fs_order) << '\n'
       << "fs_knots = " << auto_int(c.fs_knots) << '\n'
       << "fs_tensor_knots = " << auto_int(c.fs_tensor_knots) << '\n'
       << "fs_full_tensor = " << (c.fs_full_tensor ? "true" : "false") << '\n'
       << "fs_categorical_interactions = "
       << (c.fs_categorical_interactions ? (*c.fs_categorical_interactions ? "true" : "false")
                                         : "auto")
       << '\n'
       << "ss_order = " << c.ss_order << '\n'
       << "ss_knots = " << auto_int(c.ss_knots) << '\n'
       << "ss_tensor_knots = " << auto_int(c.ss_tensor_knots) << '\n'
       << "ss_full_tensor = " << (c.ss_full_tensor ? "true" : "false") << '\n'
       << "gtol = " << format_double(c.gtol) << '\n'
       << "max_iter = " << c.max_iter << '\n'
       << "out_dir = " << c.out_dir << '\n';
    return os.str();
}

namespace {

EstimatorOptions estimator_options(const RunConfig& c)
{
    EstimatorOptions o;
    o.first_stage.order = c.fs_order.value_or(4);
    o.first_stage.n_interior = c.fs_knots;
    o.first_stage.n_interior_tensor = c.fs_tensor_knots;
    o.first_stage.full_tensor = c.fs_full_tensor;
    o.first_stage.categorical_interactions = c.fs_categorical_interactions.value_or(false);
    o.second_stage.order = c.ss_order;
    o.second_stage.n_interior = c.ss_knots;
    o.second_stage.n_interior_tensor = c.ss_tensor_knots;
    o.second_stage.full_tensor = c.ss_full_tensor;
    o.opt.gtol = c.gtol;
    o.opt.max_iter = c.max_iter;
    return o;
}

}  // namespace

SimConfig to_sim_config(const RunConfig& c)
{
    SimConfig s;
    s.dgp = DgpId::parse(c.dgp);
    s.n = c.n;
    s.replications = c.replications;
    s.seed = c.seed;
    for (const auto& e : c.estimators) s.estimators.push_back(parse_estimator(e));
    s.delta = c.delta;
    s.bootstrap_b = c.bootstrap_b;
    s.threads = c.threads;
    s.options = estimator_options(c);
    s.max_failure_rate = c.max_failure_rate;
    return s;
}

Pipeline to_pipeline(const RunConfig& c)
{
    const EstimatorOptions o = estimator_options(c);
    Pipeline p;
    p.arch = parse_architecture(c.architecture);
    p.first_stage = o.first_stage;
    p.linear_index = c.linear_index;
    p.opt = o.opt;
    p.control.variant = parse_variant(c.variant);
    p.control.L = c.exch_L;
    p.control.sieve = o.second_stage;
    p.control.linear = c.linear_controls;

    using V = ControlVariant;
    const V v = p.control.variant;
    bool ok = false;
    switch (p.arch) {
    case Architecture::None: ok = v == V::None; break;
    case Architecture::OrderedParametric: ok = v == V::None || v == V::ParametricOrdered; break;
    case Architecture::OrderedNonparametric: ok = v == V::None || v == V::SieveOrdered; break;
    case Architecture::Mnl:
        ok = v == V::None || v == V::MlogitIv || v == V::SieveProbs || v == V::ExchL;
        break;
    }
    if (!ok)
        throw Error(ErrorCode::Config, "variant '" + c.variant +
                                           "' is incompatible with architecture '" +
                                           c.architecture + "'");
    return p;
}

}  // namespace mlsel
