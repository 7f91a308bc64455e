// Per-eigenvalue forcing functions G(lambda, t) and kernels K(lambda, s, t).
//
// Continuous-time parameters: gamma1 (momentum step), gamma2 (gradient step)
// and a schedule phi with Phi = phi'/phi:
//   SGD    gamma1 = 0, gamma2 = gamma, no momentum
//   SDAHB  phi = exp(theta t), Phi = theta
//   SDANA  phi = (1 + t)^theta, Phi = theta / (1 + t)
// Forcing functions are normalized so that G(lambda, 0) = 1/2.
#pragma once

#include <string>
#include <vector>

namespace momdyn {

enum class Algo { SGD, SHB, SDAHB, SDANA, Custom };
enum class Schedule { None, Exponential, Power };
enum class KernelMode { ClosedForm, OdeExact, ConvolutionApprox };

std::string algo_name(Algo a);
Algo parse_algo(const std::string& s);
std::string mode_name(KernelMode m);
KernelMode parse_mode(const std::string& s);

struct KernelSpec {
    Algo algo = Algo::SGD;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double theta = 0.0;
    Schedule schedule = Schedule::None;
    KernelMode mode = KernelMode::ClosedForm;

    double Phi(double t) const;
    double dPhi(double t) const;
    double ddPhi(double t) const;
    double log_phi(double t) const;
    // True when K_s(t) = I(t - s) is used as is (SGD, SDAHB, SDANA in
    // convolution mode).
    bool is_convolution() const;
};

KernelSpec sgd_spec(double gamma);
KernelSpec sdahb_spec(double gamma1, double theta, double gamma2 = 0.0);
KernelSpec sdana_spec(double gamma1, double gamma2, double theta, KernelMode mode = KernelMode::ConvolutionApprox);

// (1 - cos(x sqrt(w))) / w, continued to w <= 0.
double osc(double omega, double x);
// sin(x sqrt(w)) / sqrt(w), continued to w <= 0.
double sn(double omega, double x);

// exp(-kappa t) [A + B osc(omega, t) + C sn(omega, t)], the general solution of
// the constant-coefficient moment system.
struct Oscillator {
    double kappa = 0.0, omega = 0.0, A = 0.0, B = 0.0, C = 0.0;
    double value(double t) const;
    // int_0^inf exp(x t) value(t) dt, valid for x < decay_rate().
    double laplace(double x) const;
    // Slowest exponential decay rate among the modes.
    double decay_rate() const;
};

double sgd_forcing(double lambda, double gamma, double t);
double sgd_kernel(double lambda, double gamma, double tau);
double sdahb_forcing(double lambda, double gamma1, double theta, double t);
double sdahb_kernel(double lambda, double gamma1, double theta, double tau);
double general_sdahb_forcing(double lambda, double gamma1, double gamma2, double theta, double t);
double general_sdahb_kernel(double lambda, double gamma1, double gamma2, double theta, double tau);
double sdana_kernel_conv(double lambda, double gamma1, double gamma2, double theta, double tau);

Oscillator sdahb_forcing_osc(double lambda, double gamma1, double gamma2, double theta);
Oscillator sdahb_kernel_osc(double lambda, double gamma1, double gamma2, double theta);
Oscillator sdana_conv_osc(double lambda, double gamma1, double gamma2);

// Frequency and phase of an oscillatory forcing/kernel in amplitude-phase form
// c (1 - cos(x sqrt(omega) + phase)). Only meaningful when omega > 0.
struct OscillatorParams {
    double omega = 0.0;
    double rho = 0.0;
    double cos_phase = 1.0, sin_phase = 0.0;
    bool oscillatory = false;
};
// SDAHB forcing phase.
OscillatorParams sdahb_oscillator(double lambda, double gamma1, double gamma2, double theta);
// SDANA convolution-kernel phase; omega = 4 gamma1 - gamma2^2 lambda.
OscillatorParams sdana_oscillator(double lambda, double gamma1, double gamma2);

struct OdeOptions {
    double step_scale = 1.0;     // multiplies the default RK4 step
    bool check_step = false;     // repeat at half step and compare
    double check_tol = 1e-6;     // sup-norm tolerance for that comparison
};

// RK4 step used for the third-order ODE: min(0.01, 0.1 / (1 + gamma2 lambda)).
double ode_step(double lambda, double gamma2);

// G on the grid from the third-order ODE for J = 2 phi^2 G.
std::vector<double> forcing_ode(const KernelSpec& spec, double lambda, const std::vector<double>& grid,
                                const OdeOptions& opt = {});
// K_s(t) for t in grid (all >= s) from the same ODE started at s.
std::vector<double> kernel_ode(const KernelSpec& spec, double lambda, double s, const std::vector<double>& grid,
                               const OdeOptions& opt = {});

std::vector<double> sdana_forcing_ode(double lambda, double gamma1, double gamma2, double theta,
                                      const std::vector<double>& grid, const OdeOptions& opt = {});
std::vector<double> sdana_kernel_ode(double lambda, double gamma1, double gamma2, double theta, double s,
                                     const std::vector<double>& grid, const OdeOptions& opt = {});

// Dispatch on spec: closed forms where they exist, the ODE otherwise.
std::vector<double> forcing_values(const KernelSpec& spec, double lambda, const std::vector<double>& grid);
// Convolution kernel I_lambda as an oscillator (SGD, SDAHB, SDANA convolution form).
Oscillator convolution_kernel_osc(const KernelSpec& spec, double lambda);
double convolution_kernel(const KernelSpec& spec, double lambda, double tau);

}  // namespace momdyn
