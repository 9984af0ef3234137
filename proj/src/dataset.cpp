#include "mlsel/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "mlsel/error.hpp"

namespace mlsel {

namespace {

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    for (auto& s : out) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    }
    return out;
}

bool parse_double(const std::string& s, double& v)
{
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::string row_list(const std::vector<Index>& rows)
{
    std::ostringstream os;
    for (size_t i = 0; i < rows.size() && i < 20; ++i) os << (i ? ", " : "") << rows[i];
    if (rows.size() > 20) os << ", ... (" << rows.size() << " rows)";
    return os.str();
}

std::string fmt17(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

std::vector<Index> Dataset::rows_in(int k) const
{
    std::vector<Index> r;
    for (Index i = 0; i < d.size(); ++i)
        if (d(i) == k) r.push_back(i);
    return r;
}

std::vector<Index> Dataset::continuous_columns() const
{
    std::vector<Index> c;
    for (size_t j = 0; j < kinds.size(); ++j)
        if (kinds[j] == ColumnKind::Continuous) c.push_back(static_cast<Index>(j));
    return c;
}

void Dataset::validate() const
{
    const Index n = d.size();
    if (X.rows() != n || y.size() != n)
        throw Error(ErrorCode::DataInvalid, "dataset arrays have inconsistent row counts");
    if (static_cast<Index>(names.size()) != X.cols() || static_cast<Index>(kinds.size()) != X.cols())
        throw Error(ErrorCode::DataInvalid, "column metadata does not match covariate matrix");
    if (!X.allFinite()) throw Error(ErrorCode::DataInvalid, "non-finite covariate value");

    std::vector<Index> bad_present, bad_missing;
    std::set<int> seen;
    for (Index i = 0; i < n; ++i) {
        if (d(i) < 0) throw Error(ErrorCode::DataInvalid, "negative category code");
        seen.insert(d(i));
        const bool has_y = std::isfinite(y(i));
        if (d(i) == 0 && has_y) bad_present.push_back(i + 1);
        if (d(i) >= 1 && !has_y) bad_missing.push_back(i + 1);
    }
    if (!bad_present.empty())
        throw Error(ErrorCode::DataInvalid,
                    "outcome present for non-participants (D = 0) at rows " + row_list(bad_present));
    if (!bad_missing.empty())
        throw Error(ErrorCode::DataInvalid,
                    "outcome missing for participants (D >= 1) at rows " + row_list(bad_missing));
    for (int k = 0; k <= K; ++k)
        if (!seen.count(k))
            throw Error(ErrorCode::DataInvalid,
                        "category " + std::to_string(k) + " never observed (codes must cover 0..K)");
    if (seen.size() != static_cast<size_t>(K) + 1)
        throw Error(ErrorCode::DataInvalid, "category codes exceed K");
}

Dataset load_dataset(const std::string& path, const Schema& schema)
{
    if (!std::filesystem::exists(path))
        throw Error(ErrorCode::IoNotFound, "input file not found: " + path);
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoNotFound, "cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::IoFormat, "empty file: " + path);
    const auto header = split_csv_line(line);
    std::map<std::string, size_t> col;
    for (size_t j = 0; j < header.size(); ++j) col[header[j]] = j;
    auto locate = [&](const std::string& name) {
        const auto it = col.find(name);
        if (it == col.end()) throw Error(ErrorCode::IoFormat, "missing column '" + name + "'");
        return it->second;
    };
    const size_t dcol = locate(schema.d_column);
    const size_t ycol = locate(schema.y_column);

    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw Error(ErrorCode::IoFormat, "row " + std::to_string(rows.size() + 1) +
                                                 " has " + std::to_string(fields.size()) +
                                                 " fields, header has " +
                                                 std::to_string(header.size()));
        rows.push_back(std::move(fields));
    }
    const auto n = static_cast<Index>(rows.size());
    if (n == 0) throw Error(ErrorCode::IoFormat, "no data rows in " + path);

    Dataset ds;
    ds.d.resize(n);
    ds.y.resize(n);
    int kmax = 0;
    for (Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<size_t>(i)];
        double dv = 0.0;
        if (!parse_double(r[dcol], dv) || dv != std::floor(dv))
            throw Error(ErrorCode::IoFormat, "row " + std::to_string(i + 1) +
                                                 ": category must be an integer code");
        ds.d(i) = static_cast<int>(dv);
        kmax = std::max(kmax, ds.d(i));
        double yv = 0.0;
        if (r[ycol].empty() || r[ycol] == "NA" || r[ycol] == "nan") {
            ds.y(i) = std::numeric_limits<double>::quiet_NaN();
        } else if (parse_double(r[ycol], yv)) {
            ds.y(i) = yv;
        } else {
            throw Error(ErrorCode::IoFormat, "row " + std::to_string(i + 1) + ": bad outcome value");
        }
    }
    ds.K = kmax;

    std::vector<VectorXd> cols;
    auto numeric_column = [&](const std::string& name) {
        const size_t j = locate(name);
        VectorXd v(n);
        for (Index i = 0; i < n; ++i)
            if (!parse_double(rows[static_cast<size_t>(i)][j], v(i)) || !std::isfinite(v(i)))
                throw Error(ErrorCode::DataInvalid, "row " + std::to_string(i + 1) +
                                                        ": non-numeric or missing value in '" +
                                                        name + "'");
        return v;
    };
    for (const auto& name : schema.continuous) {
        cols.push_back(numeric_column(name));
        ds.names.push_back(name);
        ds.kinds.push_back(ColumnKind::Continuous);
    }
    for (const auto& name : schema.binary) {
        cols.push_back(numeric_column(name));
        ds.names.push_back(name);
        ds.kinds.push_back(ColumnKind::Categorical);
    }
    for (const auto& name : schema.categorical) {
        const size_t j = locate(name);
        std::set<std::string> levels;
        for (const auto& r : rows) {
            if (r[j].empty())
                throw Error(ErrorCode::DataInvalid, "missing level in categorical '" + name + "'");
            levels.insert(r[j]);
        }
        bool first = true;
        for (const auto& lev : levels) {
            if (first) {
                first = false;
                continue;
            }
            VectorXd v(n);
            for (Index i = 0; i < n; ++i) v(i) = rows[static_cast<size_t>(i)][j] == lev ? 1.0 : 0.0;
            cols.push_back(std::move(v));
            ds.names.push_back(name + "=" + lev);
            ds.kinds.push_back(ColumnKind::Categorical);
        }
    }
    ds.X.resize(n, static_cast<Index>(cols.size()));
    for (size_t j = 0; j < cols.size(); ++j) ds.X.col(static_cast<Index>(j)) = cols[j];

    ds.validate();
    if (ds.X.cols() > 0) {
        const auto indep = independent_columns(ds.X, MatrixXd::Ones(n, 1));
        if (static_cast<Index>(indep.size()) < ds.X.cols())
            throw Error(ErrorCode::DataInvalid, "covariates are perfectly multicollinear");
    }
    return ds;
}

Schema write_dataset(const std::string& path, const Dataset& ds)
{
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoNotFound, "cannot write " + path);
    Schema schema;
    out << schema.d_column << "," << schema.y_column;
    for (size_t j = 0; j < ds.names.size(); ++j) {
        out << "," << ds.names[j];
        (ds.kinds[j] == ColumnKind::Continuous ? schema.continuous : schema.binary)
            .push_back(ds.names[j]);
    }
    out << "\n";
    for (Index i = 0; i < ds.n(); ++i) {
        out << ds.d(i) << ",";
        if (std::isfinite(ds.y(i))) out << fmt17(ds.y(i));
        for (Index j = 0; j < ds.X.cols(); ++j) out << "," << fmt17(ds.X(i, j));
        out << "\n";
    }
    if (!out) throw Error(ErrorCode::IoFormat, "write failed: " + path);
    return schema;
}

Dataset take_rows(const Dataset& ds, const std::vector<Index>& rows)
{
    Dataset out;
    out.X = select_rows(ds.X, rows);
    out.y = select_rows(ds.y, rows);
    out.d.resize(static_cast<Index>(rows.size()));
    for (size_t i = 0; i < rows.size(); ++i) out.d(static_cast<Index>(i)) = ds.d(rows[i]);
    out.names = ds.names;
    out.kinds = ds.kinds;
    out.K = ds.K;
    return out;
}

}  // namespace mlsel
