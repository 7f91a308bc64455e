#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "momdyn/analysis.hpp"
#include "momdyn/errors.hpp"
#include "momdyn/lsq.hpp"
#include "momdyn/momentum.hpp"
#include "momdyn/volterra.hpp"

using namespace momdyn;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double oracle_error(double h, Quadrature q) {
    const auto grid = uniform_grid(h, 10.0);
    std::vector<double> F(grid.size(), 1.0), I(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) I[i] = 0.5 * std::exp(-grid[i]);
    SolveOptions o;
    o.quadrature = q;
    const auto s = solve_convolution(F, I, h, o, 0.5 * std::exp(-0.5 * h));
    double e = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) e = std::max(e, std::abs(s.psi[i] - (2.0 - std::exp(-0.5 * grid[i]))));
    return e;
}

}  // namespace

TEST_CASE("grid") {
    auto g = uniform_grid(0.25, 1.0);
    CHECK(g.size() == 5);
    CHECK(g.back() == 1.0);
    CHECK_THROWS_AS(uniform_grid(0.3, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(uniform_grid(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("forcing") {
    const auto grid = uniform_grid(0.1, 3.0);
    const auto mu = mp_measure(0.5);
    for (double v : build_forcing(mu, sgd_spec(1.0), 0.0, 0.0, grid)) CHECK(v == 0.0);
    const double R = 1.3, Rt = 0.4;
    CHECK(build_forcing(mu, sgd_spec(1.0), R, Rt, grid)[0] == doctest::Approx(0.5 * (R * trace_moment(mu) + Rt)));
    const auto atom = esm_from_eigenvalues({1.0});
    const auto F = build_forcing(atom, sgd_spec(0.5), 1.0, 0.0, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(F[i] == doctest::Approx(0.5 * std::exp(-grid[i])));
}

TEST_CASE("initial forcing matches the Monte Carlo initial loss") {
    const double R = 1.0, Rt = 0.5;
    double mean = 0.0;
    const int reps = 40;
    for (int s = 0; s < reps; ++s) {
        auto p = generate_gaussian(200, 200, R, Rt, 100 + s);
        mean += loss(p, p.x0) / reps;
    }
    const double F0 = build_forcing(mp_measure(1.0), sgd_spec(1.0), R, Rt, {0.0})[0];
    CHECK(mean == doctest::Approx(F0).epsilon(0.03));
}

TEST_CASE("spectral forcing starts at the problem's initial loss") {
    auto p = generate_gaussian(40, 30, 1.0, 1.0, 8);
    const ModeTable m = modes_from_spectral(to_spectral(p));
    CHECK(build_forcing(m, sdahb_spec(2.0, 2.0), {0.0})[0] == doctest::Approx(loss(p, p.x0)).epsilon(1e-12));
}

TEST_CASE("convolution kernel") {
    const auto grid = uniform_grid(0.1, 5.0);
    for (double v : build_convolution_kernel(esm_from_eigenvalues({0.0}), sgd_spec(1.0), grid)) CHECK(v == 0.0);
    const auto I = build_convolution_kernel(esm_from_eigenvalues({1.0}), sgd_spec(0.5), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(I[i] == doctest::Approx(0.25 * std::exp(-grid[i])));
    // Trapezoid integral of I over a long grid against the closed-form norm.
    const auto mu = mp_measure(2.0);
    const auto k = sdahb_spec(2.0, 2.0);
    const auto g = uniform_grid(0.01, 200.0);
    const auto J = build_convolution_kernel(mu, k, g);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) s += 0.5 * (J[i] + J[i + 1]) * 0.01;
    CHECK(std::abs(s - kernel_norm(k, mu)) < 1e-3);
}

TEST_CASE("kernel norms: quadrature and Laplace route") {
    const auto mu = mp_measure(2.0);
    const ModeTable m = modes_from_measure(mu, 0.0, 0.0);
    for (const KernelSpec& k : {sgd_spec(1.0), sdahb_spec(2.0, 2.0), sdahb_spec(1.0, 1.5, 0.3),
                                sdana_spec(0.25, 1.0, 4.0)}) {
        CHECK(std::abs(kernel_norm_numeric(m, k) - kernel_norm_modes(m, k)) < 1e-6);
        CHECK(std::abs(kernel_norm_modes(m, k) - kernel_norm(k, mu)) < 1e-10);
    }
}

TEST_CASE("zero kernel returns the forcing") {
    std::vector<double> F = {1.0, 0.7, 0.4, 0.3, 0.25};
    std::vector<double> I(5, 0.0);
    for (auto q : {Quadrature::Trapezoid, Quadrature::Simpson}) {
        SolveOptions o;
        o.quadrature = q;
        CHECK(solve_convolution(F, I, 0.1, o).psi == F);
        CHECK(solve_general(F, [](double, double) { return 0.0; }, 0.1, o).psi == F);
    }
}

TEST_CASE("analytic oracle and convergence order") {
    const double e1 = oracle_error(0.05, Quadrature::Simpson), e2 = oracle_error(0.025, Quadrature::Simpson);
    CHECK(e1 < 1e-6);
    CHECK(e1 / e2 >= 4.0);
    const double t1 = oracle_error(0.05, Quadrature::Trapezoid), t2 = oracle_error(0.025, Quadrature::Trapezoid);
    CHECK(t1 / t2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("marching and picard agree") {
    const auto mu = mp_measure(1.0);
    const KernelSpec k = sgd_spec(1.0);
    const auto grid = uniform_grid(0.05, 20.0);
    const auto F = build_forcing(mu, k, 1.0, 1.0, grid);
    const auto I = build_convolution_kernel(mu, k, grid);
    SolveOptions pic;
    pic.method = SolveMethod::Picard;
    pic.picard_tol = 1e-13;
    const auto a = solve_convolution(F, I, 0.05);
    const auto b = solve_convolution(F, I, 0.05, pic);
    CHECK(b.picard_iters > 1);
    CHECK(max_abs_diff(a.psi, b.psi) < 1e-8);
    CHECK(a.residual < 1e-12);
    CHECK(a.nonnegative);
}

TEST_CASE("picard failure is reported") {
    std::vector<double> F(41, 1.0), I(41, 3.0);
    SolveOptions o;
    o.method = SolveMethod::Picard;
    o.picard_max_iter = 5;
    CHECK_THROWS_AS(solve_convolution(F, I, 0.1, o), NumericalError);
}

TEST_CASE("general solver reduces to the convolution solver") {
    const double h = 0.05;
    const auto grid = uniform_grid(h, 10.0);
    std::vector<double> F(grid.size()), I(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        F[i] = 0.5 + 0.5 * std::cos(grid[i]);
        I[i] = 0.3 * std::exp(-0.7 * grid[i]) * (1.0 + std::sin(grid[i]));
    }
    auto Ifun = [](double tau) { return 0.3 * std::exp(-0.7 * tau) * (1.0 + std::sin(tau)); };
    const auto a = solve_convolution(F, I, h, {}, Ifun(0.5 * h));
    const auto b = solve_general(F, [&](double s, double t) { return Ifun(t - s); }, h);
    CHECK(max_abs_diff(a.psi, b.psi) < 1e-10);
}

TEST_CASE("state-space solver matches convolution marching") {
    const auto mu = mp_measure(1.0, 60);
    const ModeTable m = modes_from_measure(mu, 1.0, 0.5);
    for (const KernelSpec& k : {sgd_spec(1.0), sdahb_spec(2.0, 2.0), sdahb_spec(1.0, 1.5, 0.4)}) {
        PredictOptions po;
        po.T = 20.0;
        po.h = 0.025;
        const auto a = predict(m, k, po);
        const auto b = solve_state_space(m, k, po.h, po.T);
        CHECK(max_abs_diff(a.psi, b.psi) < 1e-6);
        CHECK(max_abs_diff(a.F, b.F) < 1e-8);
    }
}

TEST_CASE("exact sdana: state space and tabulated two-time kernel agree") {
    const auto mu = mp_measure(1.0, 16);
    const ModeTable m = modes_from_measure(mu, 1.0, 0.2);
    const KernelSpec k = sdana_spec(0.25, 1.0, 4.0, KernelMode::OdeExact);
    PredictOptions po;
    po.T = 10.0;
    po.h = 0.05;
    const auto a = predict(m, k, po);
    po.exact_route = ExactRoute::GeneralKernel;
    const auto b = predict(m, k, po);
    CHECK(a.method == "state-space");
    CHECK(b.method == "marching-general");
    double rel = 0.0;
    for (std::size_t i = 0; i < a.psi.size(); ++i) rel = std::max(rel, std::abs(a.psi[i] - b.psi[i]) / a.psi[i]);
    CHECK(rel < 1e-4);
}

TEST_CASE("sdana convolution form and exact solution approach each other") {
    const auto mu = mp_measure(1.0, 100);
    const ModeTable m = modes_from_measure(mu, 1.0, 0.0);
    PredictOptions po;
    po.T = 200.0;
    const auto exact = predict(m, sdana_spec(0.25, 1.0, 4.0, KernelMode::OdeExact), po);
    const auto conv = predict(m, sdana_spec(0.25, 1.0, 4.0), po);
    CHECK(conv.method == "marching-phi-weighted");
    for (std::size_t i = 0; i < exact.grid.size(); ++i)
        if (exact.grid[i] >= 100.0) CHECK(std::abs(conv.psi[i] / exact.psi[i] - 1.0) < 0.1);
}

TEST_CASE("limiting loss is reached") {
    const auto mu = mp_measure(0.5);
    PredictOptions po;
    po.T = 200.0;
    const auto s = predict(modes_from_measure(mu, 1.0, 1.0), sgd_spec(1.0), po);
    CHECK(s.psi.back() == doctest::Approx(limiting_loss(1.0, 0.5, 0.5)).epsilon(0.02));
    CHECK(s.kernel_norm == doctest::Approx(0.5));
    const auto j = solution_metadata(s);
    CHECK(j["method"] == "marching");
    CHECK(j["T"] == 200.0);
}
