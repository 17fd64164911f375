#pragma once

// File formats.
//
//   signal      rows = vertices, columns = time steps; no header, or a header
//               line starting with `id` followed by an id column.
//               Empty cells, `nan` and `NA` mark missing values.
//   edges       header `i,j,w`, one undirected edge per row (a mirrored
//               duplicate with the same weight is accepted).
//   coords      header `id,x,y[,z]`.
//   spectrum    header `n,tau,re,im`.
//   jpsd        header `n,tau,h`.
//   basis       first row eigenvalues, then the N x N eigenvector matrix.
//   models      JSON bundles (see to_json overloads below).

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tvarma/arma.hpp"
#include "tvarma/baselines.hpp"
#include "tvarma/errors.hpp"
#include "tvarma/evaluation.hpp"
#include "tvarma/graph.hpp"
#include "tvarma/joint_causal.hpp"
#include "tvarma/spectral.hpp"

namespace tvarma::io {

using json = nlohmann::json;

namespace text {

inline std::string trim(std::string_view s)
{
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos) return {};
    auto end = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(begin, end - begin + 1));
}

inline std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

inline std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline std::vector<std::vector<std::string>> read_rows(std::istream& in)
{
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        rows.push_back(split(line));
    }
    return rows;
}

inline bool is_missing(const std::string& cell)
{
    const auto l = lower(cell);
    return l.empty() || l == "nan" || l == "na" || l == "null";
}

inline double parse_double(const std::string& cell, std::size_t line)
{
    if (is_missing(cell)) return std::numeric_limits<double>::quiet_NaN();
    double value = 0.0;
    const auto* first = cell.data();
    const auto* last = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        std::ostringstream msg;
        msg << "line " << line << ": cannot parse '" << cell << "' as a number";
        throw usage_error(msg.str());
    }
    return value;
}

inline std::size_t parse_index(const std::string& cell, std::size_t line)
{
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        std::ostringstream msg;
        msg << "line " << line << ": cannot parse '" << cell << "' as an index";
        throw usage_error(msg.str());
    }
    return value;
}

/// Maps header names to column positions and checks the required ones.
inline std::map<std::string, std::size_t> header_columns(const std::vector<std::string>& header,
                                                         std::initializer_list<const char*> required)
{
    std::map<std::string, std::size_t> cols;
    for (std::size_t c = 0; c < header.size(); ++c) cols[lower(header[c])] = c;
    for (const char* name : required) {
        if (!cols.count(name)) throw usage_error(std::string("missing CSV column '") + name + "'");
    }
    return cols;
}

inline std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw usage_error("cannot open '" + path + "' for reading");
    return in;
}

inline std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw usage_error("cannot open '" + path + "' for writing");
    out << std::setprecision(17);
    return out;
}

} // namespace text

// ---------------------------------------------------------------------------
// Signals

/// Parses a signal CSV. Missing cells come back as NaN.
inline TimeVertexSignal read_signal(std::istream& in)
{
    auto rows = text::read_rows(in);
    tvarma::detail::require(!rows.empty(), "signal file is empty");
    bool id_column = false;
    if (!rows.front().empty() && text::lower(rows.front().front()) == "id") {
        id_column = true;
        rows.erase(rows.begin());
    }
    tvarma::detail::require(!rows.empty(), "signal file has a header but no data");
    const std::size_t skip = id_column ? 1 : 0;
    const std::size_t width = rows.front().size();
    tvarma::detail::require(width > skip, "signal rows have no values");
    TimeVertexSignal x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - skip));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != width) {
            std::ostringstream msg;
            msg << "signal row " << r + 1 << " has " << rows[r].size() << " cells, expected " << width;
            throw usage_error(msg.str());
        }
        for (std::size_t c = skip; c < width; ++c)
            x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - skip)) =
                text::parse_double(rows[r][c], r + 1 + (id_column ? 1 : 0));
    }
    return x;
}

inline TimeVertexSignal read_signal(const std::string& path)
{
    auto in = text::open_in(path);
    return read_signal(in);
}

/// Fills NaN entries by linear interpolation along time (constant
/// extrapolation at the ends). Returns the number of filled entries.
inline std::size_t interpolate_missing(TimeVertexSignal& x)
{
    std::size_t filled = 0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        std::vector<Eigen::Index> known;
        for (Eigen::Index t = 0; t < x.cols(); ++t)
            if (std::isfinite(x(r, t))) known.push_back(t);
        if (known.size() == static_cast<std::size_t>(x.cols())) continue;
        if (known.empty()) {
            std::ostringstream msg;
            msg << "vertex " << r << " has no observed values";
            throw usage_error(msg.str());
        }
        std::size_t next = 0;
        for (Eigen::Index t = 0; t < x.cols(); ++t) {
            while (next < known.size() && known[next] < t) ++next;
            if (next < known.size() && known[next] == t) continue;
            ++filled;
            if (next == 0) {
                x(r, t) = x(r, known.front());
            } else if (next == known.size()) {
                x(r, t) = x(r, known.back());
            } else {
                const auto a = known[next - 1];
                const auto b = known[next];
                const double w = static_cast<double>(t - a) / static_cast<double>(b - a);
                x(r, t) = (1.0 - w) * x(r, a) + w * x(r, b);
            }
        }
    }
    return filled;
}

inline void write_matrix(std::ostream& out, const Eigen::MatrixXd& x)
{
    out << std::setprecision(17);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            if (c) out << ',';
            out << x(r, c);
        }
        out << '\n';
    }
}

inline void write_signal(const std::string& path, const Eigen::MatrixXd& x)
{
    auto out = text::open_out(path);
    write_matrix(out, x);
}

// ---------------------------------------------------------------------------
// Graphs

inline Eigen::MatrixXd read_coords(std::istream& in)
{
    auto rows = text::read_rows(in);
    tvarma::detail::require(!rows.empty(), "coordinate file is empty");
    const auto cols = text::header_columns(rows.front(), {"id", "x", "y"});
    const bool has_z = cols.count("z") > 0;
    const std::size_t n = rows.size() - 1;
    Eigen::MatrixXd coords(static_cast<Eigen::Index>(n), has_z ? 3 : 2);
    std::vector<bool> seen(n, false);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        tvarma::detail::require(row.size() == rows.front().size(), "coordinate row has the wrong number of cells");
        const auto id = text::parse_index(row[cols.at("id")], r + 1);
        tvarma::detail::require(id < n && !seen[id], "coordinate ids must be a permutation of 0..N-1");
        seen[id] = true;
        const auto i = static_cast<Eigen::Index>(id);
        coords(i, 0) = text::parse_double(row[cols.at("x")], r + 1);
        coords(i, 1) = text::parse_double(row[cols.at("y")], r + 1);
        if (has_z) coords(i, 2) = text::parse_double(row[cols.at("z")], r + 1);
    }
    tvarma::detail::require(coords.allFinite(), "coordinates must be finite");
    return coords;
}

inline Eigen::MatrixXd read_coords(const std::string& path)
{
    auto in = text::open_in(path);
    return read_coords(in);
}

inline void write_coords(const std::string& path, const Eigen::MatrixXd& coords)
{
    auto out = text::open_out(path);
    out << std::setprecision(17) << "id,x,y" << (coords.cols() > 2 ? ",z" : "") << '\n';
    for (Eigen::Index r = 0; r < coords.rows(); ++r) {
        out << r;
        for (Eigen::Index c = 0; c < coords.cols(); ++c) out << ',' << coords(r, c);
        out << '\n';
    }
}

/// Reads an edge list. The vertex count is `vertices` when nonzero, otherwise
/// one more than the largest index.
inline Graph read_graph(std::istream& in, std::size_t vertices = 0, Eigen::MatrixXd coords = {})
{
    auto rows = text::read_rows(in);
    tvarma::detail::require(!rows.empty(), "edge file is empty");
    const auto cols = text::header_columns(rows.front(), {"i", "j", "w"});
    std::map<std::pair<std::size_t, std::size_t>, double> edges;
    std::size_t n = vertices;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        tvarma::detail::require(row.size() == rows.front().size(), "edge row has the wrong number of cells");
        const auto i = text::parse_index(row[cols.at("i")], r + 1);
        const auto j = text::parse_index(row[cols.at("j")], r + 1);
        const double w = text::parse_double(row[cols.at("w")], r + 1);
        if (vertices == 0) n = std::max(n, std::max(i, j) + 1);
        const auto key = std::pair(std::min(i, j), std::max(i, j));
        if (auto it = edges.find(key); it != edges.end()) {
            tvarma::detail::require(it->second == w, "edge listed twice with different weights");
            continue;
        }
        edges.emplace(key, w);
    }
    if (coords.size() != 0 && vertices == 0) n = std::max<std::size_t>(n, static_cast<std::size_t>(coords.rows()));
    std::vector<Edge> list;
    list.reserve(edges.size());
    for (const auto& [key, w] : edges) list.push_back({key.first, key.second, w});
    return Graph(n, std::move(list), std::move(coords));
}

inline Graph read_graph(const std::string& path, std::size_t vertices = 0, Eigen::MatrixXd coords = {})
{
    auto in = text::open_in(path);
    return read_graph(in, vertices, std::move(coords));
}

inline void write_graph(std::ostream& out, const Graph& g)
{
    out << std::setprecision(17) << "i,j,w\n";
    for (const auto& e : g.edges()) out << e.i << ',' << e.j << ',' << e.weight << '\n';
}

inline void write_graph(const std::string& path, const Graph& g)
{
    auto out = text::open_out(path);
    write_graph(out, g);
}

// ---------------------------------------------------------------------------
// Spectra, JPSD and bases

inline void write_spectrum(std::ostream& out, const JointSpectrum& s)
{
    out << std::setprecision(17) << "n,tau,re,im\n";
    for (Eigen::Index n = 0; n < s.vertices(); ++n)
        for (Eigen::Index tau = 0; tau < s.steps(); ++tau)
            out << n << ',' << tau << ',' << s.coefficients(n, tau).real() << ','
                << s.coefficients(n, tau).imag() << '\n';
}

inline void write_jpsd(std::ostream& out, const Jpsd& jpsd)
{
    out << std::setprecision(17) << "n,tau,h\n";
    for (Eigen::Index n = 0; n < jpsd.vertices(); ++n)
        for (Eigen::Index tau = 0; tau < jpsd.window(); ++tau)
            out << n << ',' << tau << ',' << jpsd.h(n, tau) << '\n';
}

inline void write_jpsd(const std::string& path, const Jpsd& jpsd)
{
    auto out = text::open_out(path);
    write_jpsd(out, jpsd);
}

inline Jpsd read_jpsd(std::istream& in)
{
    auto rows = text::read_rows(in);
    tvarma::detail::require(!rows.empty(), "JPSD file is empty");
    const auto cols = text::header_columns(rows.front(), {"n", "tau", "h"});
    std::size_t n = 0;
    std::size_t t = 0;
    std::vector<std::tuple<std::size_t, std::size_t, double>> entries;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const auto i = text::parse_index(row[cols.at("n")], r + 1);
        const auto tau = text::parse_index(row[cols.at("tau")], r + 1);
        entries.emplace_back(i, tau, text::parse_double(row[cols.at("h")], r + 1));
        n = std::max(n, i + 1);
        t = std::max(t, tau + 1);
    }
    tvarma::detail::require(entries.size() == n * t, "JPSD file must list every (n, tau) pair exactly once");
    Jpsd jpsd{Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t),
                                        std::numeric_limits<double>::quiet_NaN())};
    for (const auto& [i, tau, h] : entries) jpsd.h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(tau)) = h;
    tvarma::detail::require(jpsd.h.allFinite(), "JPSD file must list every (n, tau) pair exactly once");
    tvarma::detail::require((jpsd.h.array() >= 0.0).all(), "JPSD entries must be nonnegative");
    return jpsd;
}

inline Jpsd read_jpsd(const std::string& path)
{
    auto in = text::open_in(path);
    return read_jpsd(in);
}

inline void write_basis(const std::string& path, const EigenBasis& basis)
{
    auto out = text::open_out(path);
    write_matrix(out, basis.eigenvalues.transpose());
    write_matrix(out, basis.eigenvectors);
}

inline EigenBasis read_basis(const std::string& path)
{
    auto in = text::open_in(path);
    const Eigen::MatrixXd m = read_signal(in);
    tvarma::detail::require(m.rows() == m.cols() + 1 && m.allFinite(),
                    "basis file must hold N eigenvalues followed by an N x N matrix");
    return {m.row(0).transpose(), m.bottomRows(m.cols())};
}

inline std::string checksum_hex(const EigenBasis& basis)
{
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << basis.checksum();
    return out.str();
}

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const ArmaModel& m)
{
    return {{"P", m.p()}, {"Q", m.q()}, {"ar", m.ar}, {"ma", m.ma},
            {"var", m.innovation_variance}, {"fallback", m.fallback}};
}

inline ArmaModel arma_from_json(const json& j)
{
    ArmaModel m;
    m.ar = j.at("ar").get<std::vector<double>>();
    m.ma = j.at("ma").get<std::vector<double>>();
    m.innovation_variance = j.at("var").get<double>();
    m.fallback = j.value("fallback", false);
    tvarma::detail::require(j.value("P", m.p()) == m.p() && j.value("Q", m.q()) == m.q(),
                    "ARMA orders disagree with coefficient counts");
    return m;
}

inline std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline Eigen::VectorXd to_eigen(const std::vector<double>& v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline json to_json(const JointCausalModel& model)
{
    json models = json::array();
    for (std::size_t i = 0; i < model.selected().size(); ++i) {
        json entry = to_json(model.models()[i]);
        entry["n"] = model.selected()[i];
        models.push_back(std::move(entry));
    }
    return {{"kind", "joint"},
            {"orders", {{"P", model.p()}, {"Q", model.q()}}},
            {"mean", to_vector(model.mean())},
            {"selected", model.selected()},
            {"models", models},
            {"retained_variance", model.retained_variance()},
            {"eigenbasis_checksum", checksum_hex(model.basis())}};
}

/// Rebuilds a joint model; `basis` must match the stored checksum.
inline JointCausalModel joint_from_json(const json& j, EigenBasis basis)
{
    tvarma::detail::require(j.at("kind") == "joint", "model bundle is not a joint causal model");
    tvarma::detail::require(j.at("eigenbasis_checksum").get<std::string>() == checksum_hex(basis),
                    "eigenbasis checksum mismatch: the model was fitted with a different basis");
    std::vector<ArmaModel> models;
    for (const auto& entry : j.at("models")) models.push_back(arma_from_json(entry));
    return {std::move(basis),
            j.at("selected").get<std::vector<std::size_t>>(),
            std::move(models),
            to_eigen(j.at("mean").get<std::vector<double>>()),
            j.at("orders").at("P").get<std::size_t>(),
            j.at("orders").at("Q").get<std::size_t>(),
            j.value("retained_variance", 1.0)};
}

inline json to_json(const DisjointModel& model)
{
    json models = json::array();
    for (const auto& m : model.models) models.push_back(to_json(m));
    return {{"kind", "disjoint"},
            {"orders", {{"P", model.p}, {"Q", model.q}}},
            {"mean", to_vector(model.mean)},
            {"selected", model.selected},
            {"models", models}};
}

inline DisjointModel disjoint_from_json(const json& j)
{
    tvarma::detail::require(j.at("kind") == "disjoint", "model bundle is not a disjoint model");
    DisjointModel model;
    model.p = j.at("orders").at("P").get<std::size_t>();
    model.q = j.at("orders").at("Q").get<std::size_t>();
    model.mean = to_eigen(j.at("mean").get<std::vector<double>>());
    model.selected = j.at("selected").get<std::vector<std::size_t>>();
    for (const auto& entry : j.at("models")) model.models.push_back(arma_from_json(entry));
    tvarma::detail::require(model.models.size() == static_cast<std::size_t>(model.mean.size()),
                    "disjoint model needs exactly one ARMA model per vertex");
    for (auto node : model.selected)
        tvarma::detail::require(node < model.models.size(), "selected vertex out of range");
    return model;
}

inline json nan_as_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const ForecastReport& report)
{
    json steps = json::array();
    for (const auto& s : report.steps) {
        json errors = json::array();
        for (double e : s.errors) errors.push_back(e);
        steps.push_back({{"k", s.step},
                         {"median", nan_as_null(s.median)},
                         {"mean", nan_as_null(s.mean)},
                         {"std", nan_as_null(s.stddev)},
                         {"count", s.errors.size()},
                         {"skipped", s.skipped},
                         {"errors", errors}});
    }
    json j = {{"model", report.model},
              {"fit_seconds", report.fit_seconds},
              {"predict_seconds", report.predict_seconds},
              {"steps", steps}};
    j["variance_retained"] = report.variance_retained ? json(*report.variance_retained) : json(nullptr);
    j["rank"] = report.rank ? json(*report.rank) : json(nullptr);
    return j;
}

inline void write_report_csv(std::ostream& out, const ForecastReport& report)
{
    out << std::setprecision(17) << "k,median,mean,std,count,skipped\n";
    for (const auto& s : report.steps)
        out << s.step << ',' << s.median << ',' << s.mean << ',' << s.stddev << ',' << s.errors.size()
            << ',' << s.skipped << '\n';
}

inline json to_json(const std::vector<LowRankRow>& rows)
{
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back({{"fraction_ignored", r.fraction_ignored},
                       {"joint", {{"rank", r.joint_rank},
                                  {"median_2step_error", nan_as_null(r.joint_error)},
                                  {"fit_seconds", r.joint_fit_seconds},
                                  {"ignored_energy", r.joint_ignored}}},
                       {"disjoint", {{"rank", r.disjoint_rank},
                                     {"median_2step_error", nan_as_null(r.disjoint_error)},
                                     {"fit_seconds", r.disjoint_fit_seconds},
                                     {"ignored_energy", r.disjoint_ignored}}}});
    }
    return out;
}

inline void write_lowrank_csv(std::ostream& out, const std::vector<LowRankRow>& rows)
{
    out << std::setprecision(17)
        << "fraction_ignored,joint_rank,joint_error,joint_fit_seconds,joint_ignored,"
           "disjoint_rank,disjoint_error,disjoint_fit_seconds,disjoint_ignored\n";
    for (const auto& r : rows)
        out << r.fraction_ignored << ',' << r.joint_rank << ',' << r.joint_error << ','
            << r.joint_fit_seconds << ',' << r.joint_ignored << ',' << r.disjoint_rank << ','
            << r.disjoint_error << ',' << r.disjoint_fit_seconds << ',' << r.disjoint_ignored << '\n';
}

} // namespace tvarma::io
