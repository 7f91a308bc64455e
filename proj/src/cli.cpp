#include "momdyn/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "momdyn/analysis.hpp"
#include "momdyn/errors.hpp"
#include "momdyn/io.hpp"
#include "momdyn/lsq.hpp"
#include "momdyn/momentum.hpp"
#include "momdyn/rng.hpp"
#include "momdyn/spectrum.hpp"
#include "momdyn/volterra.hpp"

namespace momdyn {

namespace {

using nlohmann::json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Config {
    std::string algo = "sgd";
    int n = 256;
    int d = 0;               // 0: from r, else n
    double r = kNaN;
    double R = 1.0, Rtilde = 1.0;
    double epochs = 10.0;
    int seeds = 10;
    std::uint64_t seed = 1;
    double gamma = kNaN, gamma1 = kNaN, gamma2 = kNaN, theta = kNaN;
    std::string measure = "mp";
    int nodes = 200;
    double h = 0.05;
    double T = kNaN;         // NaN: epochs
    std::string mode;        // empty: conv for sdana
    std::string method = "marching";
    std::string quadrature = "simpson";
    std::string data;
    int target_col = -1;
    bool center = false;
    bool no_normalize = false;
    std::string out, svg, config;
    int threads = 0;
};

class UsageError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

void add_options(CLI::App& app, Config& c) {
    app.add_option("--algo", c.algo, "sgd | shb | sdahb | sdana")
        ->check(CLI::IsMember({"sgd", "shb", "sdahb", "sdana"}));
    app.add_option("--n", c.n, "rows (samples)")->check(CLI::PositiveNumber);
    app.add_option("--d", c.d, "columns (features); default n or r*n")->check(CLI::PositiveNumber);
    app.add_option("--r", c.r, "aspect ratio d/n")->check(CLI::PositiveNumber);
    app.add_option("--R", c.R, "signal strength");
    app.add_option("--Rtilde", c.Rtilde, "noise strength");
    app.add_option("--epochs", c.epochs, "epochs per run")->check(CLI::PositiveNumber);
    app.add_option("--seeds", c.seeds, "ensemble size")->check(CLI::PositiveNumber);
    app.add_option("--seed", c.seed, "base seed");
    app.add_option("--gamma", c.gamma, "step size (sgd, shb, sdahb)");
    app.add_option("--gamma1", c.gamma1, "momentum step (sdana; sdahb alias of --gamma)");
    app.add_option("--gamma2", c.gamma2, "gradient step (sdana, sdahb)");
    app.add_option("--theta", c.theta, "momentum parameter");
    app.add_option("--measure", c.measure, "mp | esm | csv")->check(CLI::IsMember({"mp", "esm", "csv"}));
    app.add_option("--nodes", c.nodes, "quadrature nodes for mp")->check(CLI::PositiveNumber);
    app.add_option("--h", c.h, "Volterra grid step")->check(CLI::PositiveNumber);
    app.add_option("--T", c.T, "Volterra horizon (default: epochs)")->check(CLI::PositiveNumber);
    app.add_option("--mode", c.mode, "closed | ode | conv")->check(CLI::IsMember({"closed", "ode", "conv"}));
    app.add_option("--method", c.method, "marching | picard")->check(CLI::IsMember({"marching", "picard"}));
    app.add_option("--quadrature", c.quadrature, "simpson | trapezoid")
        ->check(CLI::IsMember({"simpson", "trapezoid"}));
    app.add_option("--data", c.data, "CSV data file (rows are samples)");
    app.add_option("--target-col", c.target_col, "target column index (-1: last)");
    app.add_flag("--center", c.center, "subtract column means of the data");
    app.add_flag("--no-normalize", c.no_normalize, "keep data rows unscaled");
    app.add_option("--out", c.out, "output path");
    app.add_option("--svg", c.svg, "SVG figure path");
    app.add_option("--config", c.config, "flat JSON config; flags take precedence");
    app.add_option("--threads", c.threads, "worker threads (0: all cores)");
}

std::string json_scalar(const json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
        return buf;
    }
    throw UsageError("config key '" + key + "' must be a scalar");
}

// Flat keys mirror flag names; snake case is accepted for the dashed ones.
std::string flag_for_key(std::string key) {
    if (key == "R_tilde") return "--Rtilde";
    std::replace(key.begin(), key.end(), '_', '-');
    return "--" + key;
}

// ---------------------------------------------------------------------------

struct Setup {
    Config cfg;
    std::set<std::string> from_defaults;  // parameters filled from the default table
    int n = 0, d = 0;
    std::optional<LsqProblem> data;       // --data
};

Setup resolve_sizes(const Config& c) {
    Setup s;
    s.cfg = c;
    if (!c.data.empty()) {
        CsvOptions o;
        o.normalize = !c.no_normalize;
        o.center = c.center;
        o.target_col = c.target_col;
        s.data = load_csv(c.data, o);
        s.n = s.data->n;
        s.d = s.data->d;
    } else {
        s.n = c.n;
        if (c.d > 0) s.d = c.d;
        else if (std::isfinite(c.r)) s.d = std::max(1, static_cast<int>(std::lround(c.r * c.n)));
        else s.d = c.n;
    }
    if (std::isnan(s.cfg.T)) s.cfg.T = c.epochs;
    if (s.cfg.measure == "csv" && !s.data) throw UsageError("--measure csv needs --data");
    return s;
}

double aspect(const Setup& s) { return static_cast<double>(s.d) / s.n; }

// Generated problem used for the empirical measure (ensemble member 0).
LsqProblem esm_problem(const Setup& s) {
    if (s.data) return *s.data;
    return generate_gaussian(s.n, s.d, s.cfg.R, s.cfg.Rtilde, derive_seed(s.cfg.seed, 0));
}

struct MeasureChoice {
    SpectralMeasure mu;
    ModeTable modes;
    std::string label;
};

MeasureChoice resolve_measure(const Setup& s) {
    MeasureChoice m;
    const std::string kind = s.data && s.cfg.measure == "mp" ? "csv" : s.cfg.measure;
    if (kind == "mp") {
        m.mu = mp_measure(aspect(s), s.cfg.nodes);
        m.modes = modes_from_measure(m.mu, s.cfg.R, s.cfg.Rtilde);
    } else {
        const LsqProblem p = esm_problem(s);
        m.mu = esm_from_eigenvalues(hessian_eigenvalues(p));
        m.modes = modes_from_spectral(to_spectral(p));
    }
    m.label = kind;
    return m;
}

AlgoParams resolve_algo(Setup& s, double m) {
    const Config& c = s.cfg;
    const Algo a = parse_algo(c.algo);
    AlgoParams p = defaults(a, m, s.n);
    auto take = [&](double given, double& slot, const char* name) {
        if (std::isfinite(given)) slot = given;
        else s.from_defaults.insert(name);
    };
    auto forbid = [&](double given, const char* name) {
        if (!std::isnan(given)) throw UsageError(std::string("--") + name + " does not apply to " + c.algo);
    };
    switch (a) {
        case Algo::SGD:
            take(c.gamma, p.gamma, "gamma");
            forbid(c.gamma1, "gamma1");
            forbid(c.gamma2, "gamma2");
            forbid(c.theta, "theta");
            p = sgd(p.gamma);
            break;
        case Algo::SHB:
            take(c.gamma, p.gamma, "gamma");
            take(c.theta, p.theta, "theta");
            forbid(c.gamma1, "gamma1");
            forbid(c.gamma2, "gamma2");
            p = shb(p.gamma, p.theta);
            break;
        case Algo::SDAHB: {
            if (std::isfinite(c.gamma) && std::isfinite(c.gamma1) && c.gamma != c.gamma1)
                throw UsageError("--gamma and --gamma1 disagree for sdahb");
            take(std::isfinite(c.gamma) ? c.gamma : c.gamma1, p.gamma, "gamma");
            take(c.theta, p.theta, "theta");
            double g2 = std::isfinite(c.gamma2) ? c.gamma2 : 0.0;
            p = sdahb(p.gamma, p.theta, g2);
            break;
        }
        case Algo::SDANA:
            forbid(c.gamma, "gamma");
            take(c.gamma1, p.gamma1, "gamma1");
            take(c.gamma2, p.gamma2, "gamma2");
            take(c.theta, p.theta, "theta");
            p = sdana(p.gamma1, p.gamma2, p.theta);
            if (!c.mode.empty()) p.mode = parse_mode(c.mode);
            break;
        case Algo::Custom: break;
    }
    if (a != Algo::SDANA && !c.mode.empty() && c.mode != "closed")
        throw UsageError("--mode applies to sdana only");
    return p;
}

json config_echo(const Setup& s, const AlgoParams& a, const std::string& command) {
    const Config& c = s.cfg;
    json j;
    j["command"] = command;
    j["algo"] = c.algo;
    j["n"] = s.n;
    j["d"] = s.d;
    j["r"] = aspect(s);
    j["R"] = c.R;
    j["Rtilde"] = c.Rtilde;
    j["epochs"] = c.epochs;
    j["seeds"] = c.seeds;
    j["seed"] = c.seed;
    j["measure"] = c.measure;
    j["nodes"] = c.nodes;
    j["h"] = c.h;
    j["T"] = c.T;
    j["method"] = c.method;
    j["quadrature"] = c.quadrature;
    if (!c.data.empty()) {
        j["data"] = c.data;
        j["target-col"] = c.target_col;
        j["center"] = c.center;
        j["no-normalize"] = c.no_normalize;
    }
    json params = a.to_json();
    for (auto it = params.begin(); it != params.end(); ++it)
        if (it.key() != "algo") j[it.key()] = it.value();
    j["defaults_applied"] = s.from_defaults;
    return j;
}

SolveOptions solve_options(const Config& c) {
    SolveOptions o;
    o.method = c.method == "picard" ? SolveMethod::Picard : SolveMethod::Marching;
    o.quadrature = c.quadrature == "trapezoid" ? Quadrature::Trapezoid : Quadrature::Simpson;
    return o;
}

std::string default_out(const Config& c, const std::string& command) {
    return c.out.empty() ? command + ".csv" : c.out;
}

void write_svg(const std::string& path, const std::string& svg) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot write " + path);
    f << svg;
}

// ---------------------------------------------------------------------------

struct SimResult {
    Trajectory tr;
    AlgoParams algo;
    json meta;
};

SimResult simulate(Setup& s) {
    const MeasureChoice m = s.data ? resolve_measure(s) : MeasureChoice{mp_measure(aspect(s), s.cfg.nodes), {}, "mp"};
    SimResult r;
    r.algo = resolve_algo(s, trace_moment(m.mu));
    EnsembleSpec spec;
    spec.n = s.n;
    spec.d = s.d;
    spec.R = s.cfg.R;
    spec.R_tilde = s.cfg.Rtilde;
    spec.seed = s.cfg.seed;
    spec.threads = s.cfg.threads;
    if (s.data) spec.data = &*s.data;
    r.tr = run_ensemble(spec, r.algo, s.cfg.epochs, s.cfg.seeds);
    r.meta = config_echo(s, r.algo, "simulate");
    r.meta["initial_value"] = r.tr.initial_value;
    r.meta["diverged_runs"] = r.tr.diverged_runs;
    if (r.tr.diverged_runs > 0) r.meta["diverged_at"] = r.tr.diverged_at;
    if (r.tr.diverged) throw NumericalError("all " + std::to_string(s.cfg.seeds) + " runs diverged");
    if (r.tr.diverged_runs > 0)
        std::cerr << "warning: " << r.tr.diverged_runs << " of " << s.cfg.seeds << " runs diverged\n";
    return r;
}

struct PredResult {
    VolterraSolution sol;
    AlgoParams algo;
    json meta;
};

PredResult predict_cmd(Setup& s) {
    const MeasureChoice m = resolve_measure(s);
    PredResult r;
    r.algo = resolve_algo(s, trace_moment(m.mu));
    const KernelSpec k = r.algo.continuous(s.n);
    PredictOptions po;
    po.h = s.cfg.h;
    po.T = s.cfg.T;
    po.solve = solve_options(s.cfg);
    try {
        r.sol = predict(m.modes, k, po);
    } catch (const NumericalError& e) {
        if (po.solve.method != SolveMethod::Picard) throw;
        std::cerr << "warning: " << e.what() << "; falling back to marching\n";
        po.solve.method = SolveMethod::Marching;
        r.sol = predict(m.modes, k, po);
    }
    if (!r.sol.nonnegative) std::cerr << "warning: psi has negative values\n";
    r.meta = config_echo(s, r.algo, "predict");
    r.meta["measure_resolved"] = m.label;
    r.meta["kernel_mode"] = mode_name(k.mode);
    r.meta["solution"] = solution_metadata(r.sol);
    return r;
}

int cmd_simulate(Setup& s) {
    SimResult r = simulate(s);
    const std::string out = default_out(s.cfg, "simulate");
    write_table(out, trajectory_table(r.tr));
    r.meta["out"] = out;
    write_json(sidecar_path(out), r.meta);
    if (!s.cfg.svg.empty())
        write_svg(s.cfg.svg, render_svg({{r.tr.times, r.tr.mean, "#1f77b4", "ensemble mean"}}, r.tr.times, r.tr.q10,
                                        r.tr.q90, "simulate: " + s.cfg.algo));
    std::cout << out << '\n';
    return 0;
}

int cmd_predict(Setup& s) {
    PredResult r = predict_cmd(s);
    const std::string out = default_out(s.cfg, "predict");
    write_table(out, solution_table(r.sol));
    r.meta["out"] = out;
    write_json(sidecar_path(out), r.meta);
    if (!s.cfg.svg.empty())
        write_svg(s.cfg.svg, render_svg({{r.sol.grid, r.sol.psi, "#d62728", "psi"}}, {}, {}, {},
                                        "predict: " + s.cfg.algo));
    std::cout << out << '\n';
    return 0;
}

int cmd_analyze(Setup& s) {
    const MeasureChoice m = resolve_measure(s);
    const AlgoParams a = resolve_algo(s, trace_moment(m.mu));
    const AnalysisReport rep = rate_report(a, m.mu, s.n, s.cfg.Rtilde);
    json j = rep.to_json();
    j["config"] = config_echo(s, a, "analyze");
    j["config"]["measure_resolved"] = m.label;
    const std::string text = j.dump(2);
    std::cout << text << '\n';
    if (!s.cfg.out.empty()) write_json(s.cfg.out, j);
    return 0;
}

double interpolate(const std::vector<double>& x, const std::vector<double>& y, double t) {
    const double tol = 1e-9 * std::max(1.0, std::abs(x.back()));
    if (t < x.front() - tol || t > x.back() + tol)
        throw UsageError("compare: time " + std::to_string(t) + " is outside the prediction grid");
    auto it = std::upper_bound(x.begin(), x.end(), t);
    if (it == x.begin()) return y.front();
    if (it == x.end()) return y.back();
    const std::size_t i = static_cast<std::size_t>(it - x.begin());
    const double w = (t - x[i - 1]) / (x[i] - x[i - 1]);
    return (1.0 - w) * y[i - 1] + w * y[i];
}

int cmd_compare(Setup& s) {
    Setup ps = s;
    SimResult sim = simulate(s);
    PredResult pred = predict_cmd(ps);
    const auto& tr = sim.tr;
    std::vector<double> psi(tr.times.size()), dev(tr.times.size());
    double sup = 0.0, sum = 0.0;
    int cnt = 0;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        psi[i] = interpolate(pred.sol.grid, pred.sol.psi, tr.times[i]);
        dev[i] = std::abs(tr.mean[i] - psi[i]);
        if (std::isfinite(dev[i])) {
            sup = std::max(sup, dev[i]);
            sum += dev[i];
            ++cnt;
        }
    }
    Table t = trajectory_table(tr);
    t.header.insert(t.header.end(), {"psi", "abs_dev"});
    t.columns.push_back(psi);
    t.columns.push_back(dev);
    const std::string out = default_out(s.cfg, "compare");
    write_table(out, t);
    json summary;
    summary["sup_abs_dev"] = sup;
    summary["mean_abs_dev"] = cnt ? sum / cnt : kNaN;
    summary["psi0"] = pred.sol.psi.front();
    summary["rel_sup_abs_dev"] = sup / pred.sol.psi.front();
    summary["points"] = cnt;
    json meta;
    meta["summary"] = summary;
    meta["simulate"] = sim.meta;
    meta["predict"] = pred.meta;
    meta["out"] = out;
    write_json(sidecar_path(out), meta);
    if (!s.cfg.svg.empty())
        write_svg(s.cfg.svg, render_svg({{tr.times, tr.mean, "#1f77b4", "ensemble mean"},
                                         {pred.sol.grid, pred.sol.psi, "#d62728", "psi"}},
                                        tr.times, tr.q10, tr.q90, "compare: " + s.cfg.algo));
    std::cout << summary.dump(2) << '\n';
    return 0;
}

int cmd_spectrum(Setup& s) {
    const MeasureChoice m = resolve_measure(s);
    Table t;
    t.header = {"lambda", "weight"};
    t.columns = {m.mu.lambda, m.mu.weight};
    if (m.mu.zero_mass > 0.0) {
        t.columns[0].insert(t.columns[0].begin(), 0.0);
        t.columns[1].insert(t.columns[1].begin(), m.mu.zero_mass);
    }
    const std::string out = default_out(s.cfg, "spectrum");
    write_table(out, t);
    json meta = to_json(m.mu);
    meta["measure_resolved"] = m.label;
    meta["n"] = s.n;
    meta["d"] = s.d;
    meta["seed"] = s.cfg.seed;
    meta["nodes"] = s.cfg.nodes;
    if (!s.cfg.data.empty()) meta["data"] = s.cfg.data;
    write_json(sidecar_path(out), meta);
    json brief = {{"m", trace_moment(m.mu)}, {"p", m.mu.zero_mass}, {"lambda_minus", m.mu.lambda_minus},
                  {"lambda_plus", m.mu.lambda_plus}, {"out", out}};
    std::cout << brief.dump(2) << '\n';
    return 0;
}

struct Parsed {
    Config cfg;
    std::string command;
    std::set<std::string> given;
};

// Returns -1 on success, otherwise the exit code from CLI11.
int parse(const std::vector<std::string>& args, Parsed& out) {
    CLI::App app{"Stochastic momentum on random least squares: simulation, Volterra prediction, analysis"};
    app.set_help_flag("--help", "print help");
    app.require_subcommand(1, 1);
    app.fallthrough();
    add_options(app, out.cfg);
    const char* names[] = {"simulate", "predict", "analyze", "compare", "spectrum"};
    const char* help[] = {"run an ensemble of stochastic runs", "solve the Volterra equation for psi",
                          "convergence report as JSON", "simulate and predict, then join",
                          "spectral measure table"};
    for (int i = 0; i < 5; ++i) app.add_subcommand(names[i], help[i]);
    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    out.command = app.get_subcommands().front()->get_name();
    for (const CLI::Option* o : app.get_options())
        if (o->count() > 0) out.given.insert(o->get_name());
    return -1;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        Parsed first;
        if (int code = parse(args, first); code >= 0) return code;
        if (!first.cfg.config.empty()) {
            const json j = read_json(first.cfg.config);
            if (!j.is_object()) throw UsageError("config must be a flat JSON object");
            std::vector<std::string> extra;
            for (auto it = j.begin(); it != j.end(); ++it) {
                const std::string flag = flag_for_key(it.key());
                if (flag == "--config") throw UsageError("config files cannot nest");
                if (first.given.count(flag)) continue;
                if (it.value().is_boolean()) {
                    if (it.value().get<bool>()) extra.push_back(flag);
                    continue;
                }
                extra.push_back(flag);
                extra.push_back(json_scalar(it.value(), it.key()));
            }
            args.insert(args.end(), extra.begin(), extra.end());
            Parsed second;
            if (int code = parse(args, second); code >= 0) return code;
            first = second;
        }
        Setup s = resolve_sizes(first.cfg);
        if (first.command == "simulate") return cmd_simulate(s);
        if (first.command == "predict") return cmd_predict(s);
        if (first.command == "analyze") return cmd_analyze(s);
        if (first.command == "compare") return cmd_compare(s);
        return cmd_spectrum(s);
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace momdyn
