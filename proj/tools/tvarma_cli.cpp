// Command-line front end. Exit codes: 0 success, 1 usage error, 2 numerical failure.

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tvarma/tvarma.hpp"

namespace {

using namespace tvarma;
using io::json;

struct Globals {
    std::uint64_t seed = 1;
    std::string graph;
    std::string coords;
    std::string signal;
    std::string out;
    std::string format;
    std::string basis;
};

Globals g;

std::string format_or(const std::string& fallback)
{
    const std::string f = g.format.empty() ? fallback : g.format;
    if (f != "csv" && f != "json") throw usage_error("--format must be csv or json");
    return f;
}

void emit(const std::string& text)
{
    if (g.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream file(g.out);
    if (!file) throw usage_error("cannot open '" + g.out + "' for writing");
    file << text;
}

std::string sibling(const std::string& suffix)
{
    return g.out.empty() ? std::string() : g.out + suffix;
}

void write_sidecar(const std::string& suffix, const json& j)
{
    const auto path = sibling(suffix);
    if (path.empty()) return;
    std::ofstream file(path);
    if (!file) throw usage_error("cannot open '" + path + "' for writing");
    file << j.dump(2) << '\n';
}

std::string matrix_text(const Eigen::MatrixXd& x, const std::string& format)
{
    std::ostringstream out;
    if (format == "csv") {
        io::write_matrix(out, x);
    } else {
        json rows = json::array();
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            const Eigen::RowVectorXd row = x.row(r);
            rows.push_back(std::vector<double>(row.data(), row.data() + row.size()));
        }
        out << json{{"rows", x.rows()}, {"cols", x.cols()}, {"values", rows}}.dump(2) << '\n';
    }
    return out.str();
}

TimeVertexSignal load_signal()
{
    if (g.signal.empty()) throw usage_error("--signal is required");
    TimeVertexSignal x = io::read_signal(g.signal);
    const auto filled = io::interpolate_missing(x);
    if (filled > 0) std::cerr << "interpolated " << filled << " missing value(s)\n";
    return x;
}

Graph load_graph(std::size_t vertices = 0)
{
    if (g.graph.empty()) throw usage_error("--graph is required");
    Eigen::MatrixXd coords;
    if (!g.coords.empty()) coords = io::read_coords(g.coords);
    return io::read_graph(g.graph, vertices, coords);
}

/// Basis from --basis if given, otherwise the Laplacian eigenbasis of --graph.
EigenBasis load_basis(std::size_t vertices = 0)
{
    if (!g.basis.empty()) return io::read_basis(g.basis);
    return eigendecompose(laplacian(load_graph(vertices)));
}

Selection selection_from(std::optional<std::size_t> rank_k, std::optional<double> variance_frac)
{
    if (rank_k && variance_frac) throw usage_error("--rank-k and --variance-frac are mutually exclusive");
    if (rank_k) return Selection::top(*rank_k);
    if (variance_frac) return Selection::variance(*variance_frac);
    return Selection::all();
}

json graph_json(const Graph& graph)
{
    json edges = json::array();
    for (const auto& e : graph.edges()) edges.push_back({{"i", e.i}, {"j", e.j}, {"w", e.weight}});
    return {{"vertices", graph.size()}, {"average_degree", graph.average_degree()}, {"edges", edges}};
}

// --- subcommands ----------------------------------------------------------

struct BuildGraph {
    std::string kind;
    std::size_t k = 3;
    std::size_t nodes = 50;
    double degree = 5.0;
    std::string kernel = "gaussian";
    std::string coords_out;

    void run() const
    {
        const WeightKernel w = kernel == "unit" ? WeightKernel::unit : WeightKernel::gaussian;
        Graph graph;
        if (kind == "knn") {
            if (g.coords.empty()) throw usage_error("build-graph knn needs --coords");
            graph = knn_graph(io::read_coords(g.coords), k, w);
        } else {
            graph = random_geometric_graph(nodes, degree, g.seed, w);
        }
        if (!coords_out.empty() && graph.has_coords()) io::write_coords(coords_out, graph.coords());
        std::ostringstream out;
        if (format_or("csv") == "csv") {
            io::write_graph(out, graph);
        } else {
            out << graph_json(graph).dump(2) << '\n';
        }
        emit(out.str());
        std::cerr << "vertices " << graph.size() << ", edges " << graph.edges().size() << ", average degree "
                  << graph.average_degree() << '\n';
    }
};

struct SimulateWave {
    Eigen::Index steps = 200;
    double speed = 0.0;
    double noise_std = 1.0;
    Eigen::Index burn_in = 50;
    std::size_t nodes = 50;
    double degree = 5.0;
    std::uint64_t graph_seed = 1;

    void run() const
    {
        Graph graph;
        json graph_info;
        if (!g.graph.empty()) {
            graph = load_graph();
            graph_info = {{"source", g.graph}};
        } else {
            graph = random_geometric_graph(nodes, degree, graph_seed);
            graph_info = {{"source", "random_geometric"}, {"nodes", nodes}, {"degree", degree},
                          {"seed", graph_seed}, {"average_degree", graph.average_degree()}};
            if (!g.out.empty()) {
                io::write_graph(sibling(".graph.csv"), graph);
                io::write_coords(sibling(".coords.csv"), graph.coords());
            }
        }
        const EigenBasis basis = eigendecompose(laplacian(graph));
        const WaveSimulation sim = simulate_wave(basis, steps, g.seed, {speed, noise_std, burn_in});
        emit(matrix_text(sim.signal, format_or("csv")));
        write_sidecar(".json", {{"process", "wave"}, {"graph", graph_info}, {"seed", g.seed},
                                {"steps", steps}, {"c", sim.speed}, {"noise_std", noise_std},
                                {"burn_in", burn_in}});
    }
};

struct SimulateJwss {
    Eigen::Index steps = 256;
    std::string spectrum = "ar1";
    double pole = 0.8;
    std::string jpsd_file;

    void run() const
    {
        const EigenBasis basis = load_basis();
        Eigen::MatrixXd h;
        if (!jpsd_file.empty()) {
            h = io::read_jpsd(jpsd_file).h;
            if (h.cols() != steps) throw usage_error("--jpsd window must equal --steps");
        } else if (spectrum == "white") {
            h = sample_joint_response(basis, steps, [](double, double) { return 1.0; });
        } else if (spectrum == "ar1") {
            if (!(std::abs(pole) < 1.0)) throw usage_error("--pole must lie in (-1, 1)");
            const double lmax = std::max(basis.eigenvalues.maxCoeff(), 1e-300);
            h = sample_joint_response(basis, steps, [&](double lambda, double w) {
                const double a = pole * (1.0 - 2.0 * lambda / lmax);
                return 1.0 / std::norm(1.0 - a * std::polar(1.0, -w));
            });
        } else {
            throw usage_error("--spectrum must be white or ar1");
        }
        const TimeVertexSignal x = generate_jwss(basis, h, g.seed);
        emit(matrix_text(x, format_or("csv")));
        write_sidecar(".json", {{"process", "jwss"}, {"seed", g.seed}, {"steps", steps},
                                {"spectrum", jpsd_file.empty() ? spectrum : jpsd_file},
                                {"pole", pole}, {"graph", g.graph}});
    }
};

struct Fit {
    std::string model = "joint";
    std::size_t p = 2;
    std::size_t q = 0;
    std::optional<std::size_t> rank_k;
    std::optional<double> variance_frac;
    bool train_half = false;

    void run() const
    {
        TimeVertexSignal x = load_signal();
        if (train_half) x = split_train_test(x).first;
        const Selection selection = selection_from(rank_k, variance_frac);
        json bundle;
        if (model == "joint") {
            const EigenBasis basis = load_basis(static_cast<std::size_t>(x.rows()));
            const JointCausalModel fitted = fit_joint_causal(x, basis, p, q, selection);
            bundle = io::to_json(fitted);
            if (!g.out.empty()) io::write_basis(sibling(".basis.csv"), basis);
            std::size_t fallbacks = 0;
            for (const auto& m : fitted.models()) fallbacks += m.fallback ? 1 : 0;
            if (fallbacks) std::cerr << fallbacks << " frequency fit(s) fell back to AR-only\n";
        } else if (model == "disjoint") {
            bundle = io::to_json(fit_disjoint(x, p, q, selection));
        } else {
            throw usage_error("--model must be joint or disjoint");
        }
        format_or("json");
        emit(bundle.dump(2) + "\n");
    }
};

struct Predict {
    std::string fitted;
    std::size_t steps = 1;

    void run() const
    {
        if (fitted.empty()) throw usage_error("--fitted is required");
        std::ifstream in(fitted);
        if (!in) throw usage_error("cannot open '" + fitted + "'");
        const json bundle = json::parse(in);
        const TimeVertexSignal history = load_signal();
        Eigen::MatrixXd forecast;
        if (bundle.at("kind") == "joint") {
            const auto model = io::joint_from_json(bundle, load_basis(static_cast<std::size_t>(history.rows())));
            forecast = model.predict(history, steps);
        } else {
            forecast = io::disjoint_from_json(bundle).predict(history, steps);
        }
        emit(matrix_text(forecast, format_or("csv")));
    }
};

struct Evaluate {
    std::vector<std::string> models{"joint"};
    std::size_t kmax = 5;
    std::size_t p = 2;
    std::size_t q = 0;
    std::optional<std::size_t> rank_k;
    std::optional<double> variance_frac;
    Eigen::Index window = 64;
    std::optional<std::size_t> select_max;

    void run() const
    {
        const TimeVertexSignal x = load_signal();
        ExperimentOptions opts;
        opts.p = p;
        opts.q = q;
        opts.k_max = kmax;
        opts.window = window;
        opts.selection = selection_from(rank_k, variance_frac);

        bool needs_basis = false;
        for (const auto& m : models) needs_basis |= parse_model_kind(m) != ModelKind::disjoint;
        const EigenBasis basis = needs_basis ? load_basis(static_cast<std::size_t>(x.rows()))
                                             : EigenBasis::identity(static_cast<std::size_t>(x.rows()));

        std::vector<ForecastReport> reports;
        for (const auto& m : models) {
            const ModelKind kind = parse_model_kind(m);
            ExperimentOptions o = opts;
            if (select_max && kind != ModelKind::noncausal) {
                const OrderChoice c = select_orders(kind, x, basis, *select_max, opts.selection);
                o.p = c.p;
                o.q = c.q;
                std::cerr << m << ": selected P=" << c.p << " Q=" << c.q << " (validation error " << c.error << ")\n";
            }
            reports.push_back(run_experiment(kind, x, basis, o));
        }

        std::ostringstream out;
        if (format_or("json") == "json") {
            json j = json::array();
            for (const auto& r : reports) j.push_back(io::to_json(r));
            out << (j.size() == 1 ? j[0] : j).dump(2) << '\n';
        } else {
            out << std::setprecision(17) << "model,k,median,mean,std,count,skipped\n";
            for (const auto& r : reports)
                for (const auto& s : r.steps)
                    out << r.model << ',' << s.step << ',' << s.median << ',' << s.mean << ',' << s.stddev
                        << ',' << s.errors.size() << ',' << s.skipped << '\n';
        }
        emit(out.str());
    }
};

struct LowRank {
    std::vector<double> fractions{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::size_t p = 2;
    std::size_t q = 0;
    std::size_t repeats = 3;

    void run() const
    {
        const TimeVertexSignal x = load_signal();
        const EigenBasis basis = load_basis(static_cast<std::size_t>(x.rows()));
        const auto rows = lowrank_sweep(x, basis, fractions, p, q, repeats);
        std::ostringstream out;
        if (format_or("json") == "json") {
            out << io::to_json(rows).dump(2) << '\n';
        } else {
            io::write_lowrank_csv(out, rows);
        }
        emit(out.str());
    }
};

struct JpsdEstimate {
    Eigen::Index window = 64;
    bool keep_mean = false;

    void run() const
    {
        TimeVertexSignal x = load_signal();
        const EigenBasis basis = load_basis(static_cast<std::size_t>(x.rows()));
        if (!keep_mean) x = x.colwise() - row_means(x);
        const Jpsd h = estimate_jpsd(x, basis, window);
        std::ostringstream out;
        if (format_or("csv") == "csv") {
            io::write_jpsd(out, h);
        } else {
            out << matrix_text(h.h, "json");
        }
        emit(out.str());
    }
};

struct PredictNoncausal {
    std::string jpsd_file;
    std::size_t steps = 1;
    bool demean = false;

    void run() const
    {
        if (jpsd_file.empty()) throw usage_error("--jpsd is required");
        const Jpsd jpsd = io::read_jpsd(jpsd_file);
        const TimeVertexSignal history = load_signal();
        const EigenBasis basis = load_basis(static_cast<std::size_t>(history.rows()));
        const Eigen::VectorXd mean =
            demean ? row_means(history) : Eigen::VectorXd::Zero(history.rows()).eval();
        const NoncausalPredictor predictor(jpsd, basis, mean);
        emit(matrix_text(predictor.predict(history, steps), format_or("csv")));
    }
};

void add_orders(CLI::App* cmd, std::size_t& p, std::size_t& q)
{
    cmd->add_option("--p", p, "AR order")->capture_default_str();
    cmd->add_option("--q", q, "MA order")->capture_default_str();
}

void add_selection(CLI::App* cmd, std::optional<std::size_t>& rank_k, std::optional<double>& frac)
{
    cmd->add_option("--rank-k", rank_k, "keep the K highest-energy frequencies")->check(CLI::PositiveNumber);
    cmd->add_option("--variance-frac", frac, "keep the smallest set holding this fraction of energy")
        ->check(CLI::Range(0.0, 1.0));
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Time-vertex ARMA modelling and forecasting on graphs"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--seed", g.seed, "random seed")->capture_default_str();
    app.add_option("--graph", g.graph, "edge list CSV (i,j,w)");
    app.add_option("--coords", g.coords, "vertex coordinates CSV (id,x,y[,z])");
    app.add_option("--signal", g.signal, "signal CSV (vertices x time)");
    app.add_option("--basis", g.basis, "eigenbasis CSV (overrides --graph)");
    app.add_option("--out", g.out, "output path (default stdout)");
    app.add_option("--format", g.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    BuildGraph build;
    auto* cmd_build = app.add_subcommand("build-graph", "build a kNN or random geometric graph");
    cmd_build->add_option("kind", build.kind, "knn or geometric")->required()->check(CLI::IsMember({"knn", "geometric"}));
    cmd_build->add_option("--k", build.k, "neighbours per vertex (knn)")->capture_default_str();
    cmd_build->add_option("--nodes", build.nodes, "vertex count (geometric)")->capture_default_str();
    cmd_build->add_option("--degree", build.degree, "target average degree (geometric)")->capture_default_str();
    cmd_build->add_option("--kernel", build.kernel, "edge weights")->check(CLI::IsMember({"gaussian", "unit"}))->capture_default_str();
    cmd_build->add_option("--coords-out", build.coords_out, "write generated coordinates here");

    SimulateWave wave;
    auto* cmd_wave = app.add_subcommand("simulate-wave", "noise-driven wave equation on a graph");
    cmd_wave->add_option("--steps", wave.steps)->capture_default_str();
    cmd_wave->add_option("--speed", wave.speed, "wave speed c (0: 2 / sqrt(lambda_max))")->capture_default_str();
    cmd_wave->add_option("--noise-std", wave.noise_std)->capture_default_str();
    cmd_wave->add_option("--burn-in", wave.burn_in)->capture_default_str();
    cmd_wave->add_option("--nodes", wave.nodes, "geometric graph size when --graph is absent")->capture_default_str();
    cmd_wave->add_option("--degree", wave.degree)->capture_default_str();
    cmd_wave->add_option("--graph-seed", wave.graph_seed)->capture_default_str();

    SimulateJwss jwss;
    auto* cmd_jwss = app.add_subcommand("simulate-jwss", "jointly stationary process with a given JPSD");
    cmd_jwss->add_option("--steps", jwss.steps)->capture_default_str();
    cmd_jwss->add_option("--spectrum", jwss.spectrum, "white or ar1")->capture_default_str();
    cmd_jwss->add_option("--pole", jwss.pole, "AR(1) pole at lambda = 0 (ar1)")->capture_default_str();
    cmd_jwss->add_option("--jpsd", jwss.jpsd_file, "JPSD CSV (n,tau,h) sampled on --steps bins");

    Fit fit;
    auto* cmd_fit = app.add_subcommand("fit", "fit a joint or disjoint causal model");
    cmd_fit->add_option("--model", fit.model)->check(CLI::IsMember({"joint", "disjoint"}))->capture_default_str();
    add_orders(cmd_fit, fit.p, fit.q);
    add_selection(cmd_fit, fit.rank_k, fit.variance_frac);
    cmd_fit->add_flag("--train-half", fit.train_half, "fit on the first ceil(T/2) columns only");

    Predict predict;
    auto* cmd_predict = app.add_subcommand("predict", "forecast with a fitted model");
    cmd_predict->add_option("--fitted", predict.fitted, "model JSON written by fit")->required();
    cmd_predict->add_option("--steps", predict.steps)->check(CLI::PositiveNumber)->capture_default_str();

    Evaluate evaluate_cmd;
    auto* cmd_eval = app.add_subcommand("evaluate", "rolling k-step evaluation on the second half");
    cmd_eval->add_option("--model", evaluate_cmd.models, "joint, disjoint and/or noncausal")
        ->check(CLI::IsMember({"joint", "disjoint", "noncausal"}))
        ->capture_default_str();
    cmd_eval->add_option("--kmax", evaluate_cmd.kmax)->check(CLI::PositiveNumber)->capture_default_str();
    add_orders(cmd_eval, evaluate_cmd.p, evaluate_cmd.q);
    add_selection(cmd_eval, evaluate_cmd.rank_k, evaluate_cmd.variance_frac);
    cmd_eval->add_option("--window", evaluate_cmd.window, "JPSD window (noncausal)")->capture_default_str();
    cmd_eval->add_option("--select-orders", evaluate_cmd.select_max,
                         "grid-search P, Q in [0, N] by validation error on the training half")
        ->check(CLI::Range(0, 3));

    LowRank lowrank;
    auto* cmd_lowrank = app.add_subcommand("lowrank-sweep", "low-rank joint vs native truncation");
    cmd_lowrank->add_option("--fractions", lowrank.fractions, "fractions of energy ignored")
        ->delimiter(',')
        ->capture_default_str();
    add_orders(cmd_lowrank, lowrank.p, lowrank.q);
    cmd_lowrank->add_option("--repeats", lowrank.repeats, "fits timed per fraction")->capture_default_str();

    JpsdEstimate jpsd;
    auto* cmd_jpsd = app.add_subcommand("jpsd-estimate", "Bartlett JPSD estimate");
    cmd_jpsd->add_option("--window", jpsd.window)->capture_default_str();
    cmd_jpsd->add_flag("--keep-mean", jpsd.keep_mean, "do not remove the per-vertex mean");

    PredictNoncausal noncausal;
    auto* cmd_nc = app.add_subcommand("predict-noncausal", "MMSE forecast from a JPSD");
    cmd_nc->add_option("--jpsd", noncausal.jpsd_file, "JPSD CSV (n,tau,h)")->required();
    cmd_nc->add_option("--steps", noncausal.steps)->capture_default_str();
    cmd_nc->add_flag("--demean", noncausal.demean, "condition on the history with its mean removed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*cmd_build) build.run();
        else if (*cmd_wave) wave.run();
        else if (*cmd_jwss) jwss.run();
        else if (*cmd_fit) fit.run();
        else if (*cmd_predict) predict.run();
        else if (*cmd_eval) evaluate_cmd.run();
        else if (*cmd_lowrank) lowrank.run();
        else if (*cmd_jpsd) jpsd.run();
        else if (*cmd_nc) noncausal.run();
    } catch (const usage_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "error: malformed model file: " << e.what() << '\n';
        return 1;
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
