// psi(t) = F(t) + int_0^t K_s(t) psi(s) ds on a uniform grid.
#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "momdyn/kernels.hpp"
#include "momdyn/lsq.hpp"
#include "momdyn/spectrum.hpp"

namespace momdyn {

enum class SolveMethod { Marching, Picard };
// Trapezoid is second order. Simpson uses Simpson's rule on an even number of
// panels, closes odd counts with the 3/8 rule and starts with a coupled
// two-step block; it is fourth order.
enum class Quadrature { Trapezoid, Simpson };

struct SolveOptions {
    SolveMethod method = SolveMethod::Marching;
    Quadrature quadrature = Quadrature::Simpson;
    double picard_tol = 1e-10;
    int picard_max_iter = 200;
};

struct VolterraSolution {
    std::vector<double> grid, F, psi;
    double h = 0.0;
    double kernel_norm = std::numeric_limits<double>::quiet_NaN();
    std::string method;
    double residual = 0.0;   // sup of the discretized-equation residual
    int picard_iters = 0;
    bool nonnegative = true;
};

std::vector<double> uniform_grid(double h, double T);

// Forcing and kernel weights per eigenvalue:
//   F(t) = f_zero + sum_k fweight_k G(lambda_k, t),  I = sum_k kweight_k K(lambda_k, .).
struct ModeTable {
    std::vector<double> lambda, kweight, fweight;
    double f_zero = 0.0;
};

// Expected forcing over the measure: fweight = w (R lambda + R_tilde), f_zero = p R_tilde / 2.
ModeTable modes_from_measure(const SpectralMeasure& mu, double R, double R_tilde);
// Forcing from the actual coordinates of one problem (empirical measure, weights 1/n).
ModeTable modes_from_spectral(const SpectralProblem& sp);

std::vector<double> build_forcing(const ModeTable& modes, const KernelSpec& k, const std::vector<double>& grid);
std::vector<double> build_forcing(const SpectralMeasure& mu, const KernelSpec& k, double R, double R_tilde,
                                  const std::vector<double>& grid);
std::vector<double> build_convolution_kernel(const ModeTable& modes, const KernelSpec& k,
                                             const std::vector<double>& grid);
std::vector<double> build_convolution_kernel(const SpectralMeasure& mu, const KernelSpec& k,
                                             const std::vector<double>& grid);

// F and I sampled at t_i = i h. `I_half` is I(h/2) for the Simpson start block
// (NaN: quadratic interpolation from the table).
VolterraSolution solve_convolution(const std::vector<double>& F, const std::vector<double>& I, double h,
                                   const SolveOptions& opt = {},
                                   double I_half = std::numeric_limits<double>::quiet_NaN());

using TwoTimeKernel = std::function<double(double s, double t)>;
VolterraSolution solve_general(const std::vector<double>& F, const TwoTimeKernel& K, double h,
                               const SolveOptions& opt = {});

// Integrates the coupled second-moment system of every mode with RK4; psi is
// the sum of the mode contributions. Exact for any schedule, cost O(T modes).
VolterraSolution solve_state_space(const ModeTable& modes, const KernelSpec& k, double h, double T);

// sum_k kweight_k int_0^inf K(lambda_k, tau) dtau by composite Simpson on a
// per-mode step (convolution kernels only).
double kernel_norm_numeric(const ModeTable& modes, const KernelSpec& k);
// Closed-form sum_k kweight_k int_0^inf K dtau from the Laplace transform at 0.
double kernel_norm_modes(const ModeTable& modes, const KernelSpec& k);

// Tabulated two-time SDANA kernel from the third-order ODE on the grid t_i = i h.
TwoTimeKernel tabulate_ode_kernel(const ModeTable& modes, const KernelSpec& k, double h, int N);

enum class ExactRoute { StateSpace, GeneralKernel };

struct PredictOptions {
    double h = 0.05;
    double T = 10.0;
    SolveOptions solve;
    ExactRoute exact_route = ExactRoute::StateSpace;
};

// Full prediction. Convolution-type kernels are solved directly; the SDANA
// convolution approximation is solved for phi(t) psi(t), whose kernel is
// I(t - s); the exact SDANA kernel goes through `exact_route`.
VolterraSolution predict(const ModeTable& modes, const KernelSpec& k, const PredictOptions& opt = {});

nlohmann::json solution_metadata(const VolterraSolution& sol);

}  // namespace momdyn
