// Convergence analysis from the kernel: norms, limiting loss, Malthusian
// exponents, rate bounds and power-law exponents.
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "momdyn/kernels.hpp"
#include "momdyn/momentum.hpp"
#include "momdyn/spectrum.hpp"

namespace momdyn {

// ||I|| = int_0^inf I(tau) dtau in closed form:
//   SGD  gamma m / 2,  SDAHB  gamma1 m / (2 theta),
//   SDANA  gamma1 (1 - p) / (2 gamma2) + gamma2 m / 2.
// A gradient step in SDAHB falls back to the per-eigenvalue Laplace transform.
double kernel_norm(const KernelSpec& k, const SpectralMeasure& mu);
double kernel_norm(const AlgoParams& a, const SpectralMeasure& mu, int n = 0);

// R_tilde p / (2 (1 - ||I||)); throws when ||I|| >= 1.
double limiting_loss(double R_tilde, double p, double norm);

// F(x) = int e^{x t} I(t) dt over the positive support.
double laplace_transform(const KernelSpec& k, const SpectralMeasure& mu, double x);
// Smallest kernel decay rate over the support; F is finite on (0, cap).
double malthusian_cap(const KernelSpec& k, const SpectralMeasure& mu);
// Root of F(x) = 1 in (0, cap) by bisection; empty when F(cap) < 1, when the
// spectrum touches 0, or when ||I|| >= 1.
std::optional<double> malthusian_exponent(const KernelSpec& k, const SpectralMeasure& mu);

struct AnalysisReport {
    std::string algo;
    double m = 0.0, p = 0.0, lambda_minus = 0.0, lambda_plus = 0.0;
    double kernel_norm = 0.0;
    bool convergent = false;
    double R_tilde = 1.0;
    std::optional<double> limiting_loss;
    std::optional<double> malthusian;
    double cap = 0.0;
    double rate = 0.0;                      // malthusian if present, otherwise cap
    std::optional<double> rate_lower_bound;
    std::optional<double> rate_upper_bound;
    std::optional<std::pair<double, double>> poly_exponents;  // (signal, noise)
    std::vector<std::string> notes;

    nlohmann::json to_json() const;
};

// Closed-form lower bound on the linear rate at default parameters.
std::optional<double> rate_lower_bound(const AlgoParams& a, const SpectralMeasure& mu, int n = 0);

AnalysisReport rate_report(const AlgoParams& a, const SpectralMeasure& mu, int n = 0, double R_tilde = 1.0);

// Least-squares slope of log v against log t over t in [t0, t1].
double fit_poly_rate(const std::vector<double>& t, const std::vector<double>& v, double t0, double t1);

}  // namespace momdyn
