#include "mlsel/decomposition.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <vector>

#include "mlsel/error.hpp"
#include "mlsel/monte_carlo.hpp"

namespace mlsel {

void GroupStats::validate() const
{
    const Index K = mean_a.size();
    if (K == 0 || mean_b.size() != K || share_a.size() != K || share_b.size() != K ||
        beta.size() != K)
        throw Error(ErrorCode::DataInvalid, "group statistics are not aligned across categories");
    for (const VectorXd* v : {&mean_a, &mean_b, &share_a, &share_b, &beta})
        if (!v->allFinite()) throw Error(ErrorCode::DataInvalid, "non-finite group statistic");
    if ((share_a.array() < 0.0).any() || (share_b.array() < 0.0).any())
        throw Error(ErrorCode::DataInvalid, "negative category share");
    if (std::abs(share_a.sum() - 1.0) > 1e-9 || std::abs(share_b.sum() - 1.0) > 1e-9)
        throw Error(ErrorCode::DataInvalid, "category shares must sum to one in each group");
}

Decomposition decompose(const GroupStats& gs)
{
    gs.validate();
    Decomposition d;
    d.raw = gs.share_a.dot(gs.mean_a) - gs.share_b.dot(gs.mean_b);
    d.structural_within = -gs.share_a.dot(gs.beta);
    d.covariate_composition = gs.share_a.dot(gs.mean_a - gs.mean_b + gs.beta);
    d.between_sorting = gs.mean_b.dot(gs.share_a - gs.share_b);
    return d;
}

GroupStats load_group_stats(const std::string& path)
{
    if (!std::filesystem::exists(path))
        throw Error(ErrorCode::IoNotFound, "input file not found: " + path);
    std::ifstream in(path);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::IoFormat, "empty file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "category,mean_a,mean_b,share_a,share_b,beta")
        throw Error(ErrorCode::IoFormat,
                    "group statistics header must be category,mean_a,mean_b,share_a,share_b,beta");
    std::vector<std::array<double, 5>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::istringstream ls(line);
        std::string cell;
        std::getline(ls, cell, ',');
        std::array<double, 5> r{};
        for (double& v : r) {
            if (!std::getline(ls, cell, ','))
                throw Error(ErrorCode::IoFormat, "line " + std::to_string(lineno) + ": too few fields");
            try {
                size_t used = 0;
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw Error(ErrorCode::IoFormat, "line " + std::to_string(lineno) + ": bad number");
            }
        }
        rows.push_back(r);
    }
    const auto K = static_cast<Index>(rows.size());
    GroupStats gs;
    for (VectorXd* v : {&gs.mean_a, &gs.mean_b, &gs.share_a, &gs.share_b, &gs.beta}) v->resize(K);
    for (Index k = 0; k < K; ++k) {
        const auto& r = rows[static_cast<size_t>(k)];
        gs.mean_a(k) = r[0];
        gs.mean_b(k) = r[1];
        gs.share_a(k) = r[2];
        gs.share_b(k) = r[3];
        gs.beta(k) = r[4];
    }
    gs.validate();
    return gs;
}

void write_group_stats(const std::string& path, const GroupStats& gs)
{
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoNotFound, "cannot write " + path);
    out << "category,mean_a,mean_b,share_a,share_b,beta\n";
    for (Index k = 0; k < gs.mean_a.size(); ++k)
        out << k + 1 << ',' << format_double(gs.mean_a(k)) << ',' << format_double(gs.mean_b(k))
            << ',' << format_double(gs.share_a(k)) << ',' << format_double(gs.share_b(k)) << ','
            << format_double(gs.beta(k)) << '\n';
}

std::string decomposition_csv(const Decomposition& d)
{
    std::ostringstream os;
    os << "component,value\n"
       << "raw," << format_double(d.raw) << '\n'
       << "structural_within," << format_double(d.structural_within) << '\n'
       << "covariate_composition," << format_double(d.covariate_composition) << '\n'
       << "between_sorting," << format_double(d.between_sorting) << '\n';
    return os.str();
}

std::string decomposition_text(const Decomposition& d)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << std::left << std::setw(24) << "raw gap" << std::right << std::setw(10) << d.raw << '\n'
       << std::left << std::setw(24) << "structural within" << std::right << std::setw(10)
       << d.structural_within << '\n'
       << std::left << std::setw(24) << "covariate composition" << std::right << std::setw(10)
       << d.covariate_composition << '\n'
       << std::left << std::setw(24) << "between sorting" << std::right << std::setw(10)
       << d.between_sorting << '\n';
    return os.str();
}

}  // namespace mlsel
