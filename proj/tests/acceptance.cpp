// End-to-end acceptance checks. One PASS/FAIL line per criterion; exit status
// is the number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "momdyn/analysis.hpp"
#include "momdyn/kernels.hpp"
#include "momdyn/lsq.hpp"
#include "momdyn/momentum.hpp"
#include "momdyn/spectrum.hpp"
#include "momdyn/volterra.hpp"

using namespace momdyn;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    std::printf("[%s] criterion %d: %s | %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double interp(const std::vector<double>& x, const std::vector<double>& y, double t) {
    auto it = std::lower_bound(x.begin(), x.end(), t - 1e-12);
    if (it == x.end()) return y.back();
    const std::size_t i = static_cast<std::size_t>(it - x.begin());
    if (i == 0 || std::abs(x[i] - t) < 1e-12) return y[i];
    const double w = (t - x[i - 1]) / (x[i] - x[i - 1]);
    return (1.0 - w) * y[i - 1] + w * y[i];
}

VolterraSolution psi_mp(double r, const AlgoParams& a, double R, double Rt, double T, double h = 0.05) {
    const SpectralMeasure mu = mp_measure(r, 200);
    PredictOptions po;
    po.h = h;
    po.T = T;
    return predict(modes_from_measure(mu, R, Rt), a.continuous(0), po);
}

// sup_t |ensemble mean - psi| for SGD defaults on an n x n Gaussian problem.
double concentration_stat(int n, const VolterraSolution& psi) {
    EnsembleSpec spec;
    spec.n = n;
    spec.d = n;
    spec.R = 1.0;
    spec.R_tilde = 1.0;
    spec.seed = 20240601;
    const Trajectory tr = run_ensemble(spec, defaults(Algo::SGD, 1.0), 10.0, 5);
    double sup = 0.0;
    for (std::size_t i = 0; i < tr.times.size(); ++i)
        sup = std::max(sup, std::abs(tr.mean[i] - interp(psi.grid, psi.psi, tr.times[i])));
    return sup;
}

void criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    const VolterraSolution psi = psi_mp(1.0, defaults(Algo::SGD, 1.0), 1.0, 1.0, 10.0);
    const double s1024 = concentration_stat(1024, psi);
    const double s256 = concentration_stat(256, psi);
    const double secs = seconds_since(t0);
    const double tol = 0.05 * psi.psi.front();
    report(1, s1024 <= tol && s256 > s1024 && secs <= 180.0, "concentration of SGD ensemble mean on psi",
           fmt("sup|mean-psi| n=1024 %.4g (tol %.4g), n=256 %.4g, %.1fs", s1024, tol, s256, secs));
}

void criterion2() {
    const int n = 512;
    EnsembleSpec spec;
    spec.n = n;
    spec.d = n;
    spec.R = 1.0;
    spec.R_tilde = 1.0;
    spec.seed = 7;
    const Trajectory a = run_ensemble(spec, shb(0.05, 0.1), 10.0, 10);
    const Trajectory b = run_ensemble(spec, sgd(0.5), 10.0, 10);
    double worst = 0.0;
    std::string at;
    for (double t : {1.0, 5.0, 10.0}) {
        const double va = interp(a.times, a.mean, t), vb = interp(b.times, b.mean, t);
        const double rel = std::abs(va - vb) / vb;
        worst = std::max(worst, rel);
        at += fmt(" t=%g:%.3g", t, rel);
    }
    // Bitwise identity of iterates on one problem.
    const LsqProblem p = generate_gaussian(n, n, 1.0, 1.0, 11);
    const auto xs = iterates(p, shb(0.05, 0.1), 4 * n, 3);
    const auto ys = iterates(p, sdahb(0.05 * n, 0.1 * n), 4 * n, 3);
    bool bitwise = xs.size() == ys.size();
    for (std::size_t k = 0; bitwise && k < xs.size(); ++k) bitwise = (xs[k].array() == ys[k].array()).all();
    report(2, worst <= 0.05 && bitwise, "SHB(0.05,0.1) matches SGD(0.5); SHB/SDAHB iterates bitwise",
           fmt("max rel diff %.4g (tol 0.05)%s; bitwise %s over %d steps", worst, at.c_str(),
               bitwise ? "yes" : "no", 4 * n));
}

void criterion3() {
    const SpectralMeasure mp1 = mp_measure(1.0, 200), mp2 = mp_measure(2.0, 200);
    struct Case {
        const char* name;
        KernelSpec k;
        const SpectralMeasure* mu;
        double expect;
    };
    const Case cases[] = {
        {"sgd MP(1)", defaults(Algo::SGD, mp1).continuous(0), &mp1, 0.5},
        {"sdahb MP(1)", defaults(Algo::SDAHB, mp1).continuous(0), &mp1, 0.5},
        {"sdana MP(2)", defaults(Algo::SDANA, mp2).continuous(0), &mp2, 0.625},
    };
    bool ok = true;
    std::string d;
    for (const auto& c : cases) {
        const double exact = kernel_norm(c.k, *c.mu);
        const double quad = kernel_norm_numeric(modes_from_measure(*c.mu, 0.0, 0.0), c.k);
        const bool good = std::abs(exact - c.expect) <= 1e-12 && std::abs(quad - c.expect) <= 1e-3;
        ok = ok && good;
        d += fmt("%s %.15g/%.8g; ", c.name, exact, quad);
    }
    report(3, ok, "kernel norms exact to 1e-12, quadrature to 1e-3", d);
}

void criterion4() {
    const SpectralMeasure mu = mp_measure(0.5, 200);
    const AlgoParams a = defaults(Algo::SGD, mu);
    const double norm = kernel_norm(a, mu);
    const double lim = limiting_loss(1.0, mu.zero_mass, norm);
    const VolterraSolution s = psi_mp(0.5, a, 1.0, 1.0, 200.0);
    const double rel = std::abs(s.psi.back() - lim) / lim;
    report(4, rel <= 0.02 && std::abs(mu.zero_mass - 0.5) < 1e-12, "limiting loss of SGD on MP(0.5)",
           fmt("psi(200) %.8g, limit %.8g, rel %.3g (tol 0.02)", s.psi.back(), lim, rel));
}

double oracle_error(double h) {
    const auto grid = uniform_grid(h, 10.0);
    std::vector<double> F(grid.size(), 1.0), I(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) I[i] = 0.5 * std::exp(-grid[i]);
    const VolterraSolution s = solve_convolution(F, I, h, {}, 0.5 * std::exp(-0.5 * h));
    double err = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) err = std::max(err, std::abs(s.psi[i] - (2.0 - std::exp(-0.5 * grid[i]))));
    return err;
}

void criterion5() {
    const double e1 = oracle_error(0.05), e2 = oracle_error(0.025);
    report(5, e1 <= 1e-6 && e1 / e2 >= 4.0, "analytic Volterra oracle",
           fmt("err h=0.05 %.3g (tol 1e-6), h=0.025 %.3g, ratio %.3g (>= 4)", e1, e2, e1 / e2));
}

void criterion6() {
    bool ok = true;
    std::string d;
    for (double g : {0.3, 0.7, 1.2}) {
        const SpectralMeasure atom = esm_from_eigenvalues({1.0});
        const auto x = malthusian_exponent(sgd_spec(g), atom);
        const double expect = 2.0 * g - g * g;
        const bool good = x && std::abs(*x - expect) <= 1e-10;
        ok = ok && good;
        d += fmt("g=%g root %.13g vs %.13g; ", g, x ? *x : NAN, expect);
    }
    for (double r : {2.0, 4.0}) {
        const SpectralMeasure mu = mp_measure(r, 200);
        for (Algo a : {Algo::SGD, Algo::SDAHB, Algo::SDANA}) {
            const AnalysisReport rep = rate_report(defaults(a, mu), mu);
            const bool good = rep.rate_lower_bound && rep.rate >= *rep.rate_lower_bound;
            ok = ok && good;
            d += fmt("%s r=%g rate %.4g >= %.4g; ", algo_name(a).c_str(), r, rep.rate,
                     rep.rate_lower_bound ? *rep.rate_lower_bound : NAN);
        }
    }
    report(6, ok, "Malthusian root of a single atom and closed-form rate lower bounds", d);
}

void criterion7() {
    const auto t0 = std::chrono::steady_clock::now();
    const SpectralMeasure mu = mp_measure(1.0, 200);
    struct Case {
        const char* name;
        Algo a;
        double R, Rt, lo, hi;
    };
    const Case cases[] = {
        {"sgd noiseless", Algo::SGD, 1.0, 0.0, -1.7, -1.3},
        {"sgd noisy", Algo::SGD, 1.0, 1.0, -0.7, -0.3},
        {"sdana noiseless", Algo::SDANA, 1.0, 0.0, -1e300, -2.5},
        {"sdana noisy", Algo::SDANA, 1.0, 1.0, -1.3, -0.7},
    };
    bool ok = true;
    std::string d;
    for (const auto& c : cases) {
        const VolterraSolution s = psi_mp(1.0, defaults(c.a, mu), c.R, c.Rt, 300.0);
        const double slope = fit_poly_rate(s.grid, s.psi, 30.0, 300.0);
        const bool good = slope >= c.lo && slope <= c.hi;
        ok = ok && good;
        d += fmt("%s %.4g; ", c.name, slope);
    }
    const double secs = seconds_since(t0);
    d += fmt("%.1fs", secs);
    report(7, ok && secs <= 300.0, "log-log slopes on MP(1) over t in [30, 300]", d);
}

void criterion8() {
    std::mt19937_64 eng(8);
    std::uniform_real_distribution<double> U(0.05, 2.0);
    double worst_closed = 0.0, worst_ode = 0.0;
    for (int draw = 0; draw < 50; ++draw) {
        const double lam = U(eng), g1 = U(eng), g2 = U(eng), th = 1.0 + 4.0 * U(eng), s = 3.0 * U(eng);
        const KernelSpec specs[] = {sgd_spec(g2), sdahb_spec(g1, th), sdahb_spec(g1, th, g2),
                                    sdana_spec(g1, g2, th, KernelMode::ConvolutionApprox)};
        for (const KernelSpec& k : specs) {
            const double G0 = forcing_values(k, lam, {0.0})[0];
            const double K0 = convolution_kernel(k, lam, 0.0);
            worst_closed = std::max({worst_closed, std::abs(G0 - 0.5), std::abs(K0 - lam * lam * k.gamma2 * k.gamma2)});
        }
        for (KernelSpec k : {sdahb_spec(g1, th, g2), sdana_spec(g1, g2, th, KernelMode::OdeExact)}) {
            k.mode = KernelMode::OdeExact;
            const double G0 = forcing_ode(k, lam, {0.0})[0];
            const double Ks = kernel_ode(k, lam, s, {s})[0];
            worst_ode = std::max({worst_ode, std::abs(G0 - 0.5), std::abs(Ks - lam * lam * k.gamma2 * k.gamma2)});
        }
    }
    // RK4 order: errors against a fine reference at two step sizes.
    const KernelSpec k = sdana_spec(0.25, 1.0, 4.0, KernelMode::OdeExact);
    std::vector<double> grid;
    for (int i = 1; i <= 40; ++i) grid.push_back(0.25 * i);
    OdeOptions fine, coarse, half;
    fine.step_scale = 1.0 / 32.0;
    coarse.step_scale = 1.0;
    half.step_scale = 0.5;
    const double lam = 1.5;
    const auto ref = forcing_ode(k, lam, grid, fine), a = forcing_ode(k, lam, grid, coarse),
               b = forcing_ode(k, lam, grid, half);
    double ea = 0.0, eb = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        ea = std::max(ea, std::abs(a[i] - ref[i]));
        eb = std::max(eb, std::abs(b[i] - ref[i]));
    }
    const bool ok = worst_closed <= 1e-12 && worst_ode <= 1e-8 && ea / eb >= 12.0;
    report(8, ok, "G(0) = 1/2, K_s(s) = lambda^2 Gamma2^2, RK4 order",
           fmt("closed max err %.3g, ODE max err %.3g, RK4 halving ratio %.3g (>= 12)", worst_closed, worst_ode,
               ea / eb));
}

void criterion9() {
    const SpectralMeasure mu = mp_measure(1.0, 200);
    bool ok = true;
    std::string d;
    for (double Rt : {0.0, 1.0}) {
        const ModeTable modes = modes_from_measure(mu, 1.0, Rt);
        const AlgoParams conv = defaults(Algo::SDANA, mu);
        AlgoParams exact = conv;
        exact.mode = KernelMode::OdeExact;
        PredictOptions po;
        po.T = 300.0;
        const VolterraSolution a = predict(modes, exact.continuous(0), po);
        const VolterraSolution b = predict(modes, conv.continuous(0), po);
        double worst = 0.0;
        for (std::size_t i = 0; i < a.grid.size(); ++i)
            if (a.grid[i] >= 100.0) worst = std::max(worst, std::abs(b.psi[i] - a.psi[i]) / a.psi[i]);
        ok = ok && worst <= 0.10;
        d += fmt("Rtilde=%g max rel %.4g; ", Rt, worst);
    }
    report(9, ok, "SDANA exact vs convolution form for t >= 100 (tol 0.10)", d);
}

void criterion10() {
    const LsqProblem p = generate_gaussian(512, 512, 1.0, 1.0, 10);
    const SpectralProblem& sp = to_spectral(p);
    const KernelSpec k = defaults(Algo::SGD, 1.0).continuous(0);
    HomogenizedOptions ho;
    ho.dt = 0.002;
    ho.record_every = 0.25;
    const Trajectory tr = simulate_homogenized_ensemble(sp, k, 5.0, 50, 10, ho);
    PredictOptions po;
    po.h = 0.05;
    po.T = 5.0;
    const VolterraSolution s = predict(modes_from_spectral(sp), k, po);
    double worst = 0.0;
    int bad = 0;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        const double psi = interp(s.grid, s.psi, tr.times[i]);
        const double dev = std::abs(tr.mean[i] - psi);
        const double allowed = 3.0 * tr.stderr_[i] + 1e-12 * std::max(1.0, psi);
        // t = 0 is deterministic; its SE is rounding noise.
        if (tr.times[i] > 0.0) worst = std::max(worst, dev / std::max(tr.stderr_[i], 1e-300));
        if (dev > allowed) ++bad;
    }
    report(10, bad == 0, "homogenized SGD paths vs psi within 3 standard errors on [0, 5]",
           fmt("%zu times, %d outside, max |mean-psi|/SE for t > 0 %.3g", tr.times.size(), bad, worst));
}

}  // namespace

int main() {
    const std::function<void()> all[] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                         criterion6, criterion7, criterion8, criterion9, criterion10};
    int id = 1;
    for (const auto& c : all) {
        try {
            c();
        } catch (const std::exception& e) {
            report(id, false, "exception", e.what());
        }
        ++id;
    }
    std::printf("%d of 10 criteria failed\n", failures);
    return failures;
}
