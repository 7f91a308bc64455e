// Spectral measures of the Hessian H = A A^T and integration against them.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace momdyn {

enum class MeasureKind { Discrete, MarchenkoPastur };

// A probability measure on [0, inf): a point mass at zero plus either a list of
// positive atoms (Discrete) or a Gauss-Chebyshev table for the continuous part
// of the Marchenko-Pastur law. In both cases `lambda`/`weight` hold the
// positive support points, so integration code never needs to branch on kind.
struct SpectralMeasure {
    MeasureKind kind = MeasureKind::Discrete;
    double r = 0.0;          // d/n, MP only
    int nodes = 0;           // quadrature size, MP only
    double zero_mass = 0.0;  // mu({0})
    std::vector<double> lambda;
    std::vector<double> weight;
    double lambda_minus = 0.0;  // left edge of the positive support
    double lambda_plus = 0.0;   // right edge

    std::size_t size() const { return lambda.size(); }
};

SpectralMeasure mp_measure(double r, int nodes = 200);

// Relative threshold (times the largest eigenvalue) below which an eigenvalue
// is treated as an exact zero.
inline constexpr double kZeroThreshold = 1e-10;

SpectralMeasure esm_from_eigenvalues(std::vector<double> eigs);

// p*g(0) + sum_k w_k g(lambda_k). Throws NumericalError on non-finite values.
double integrate(const SpectralMeasure& mu, const std::function<double(double)>& g);

// Same, but the zero atom is skipped.
double integrate_positive(const SpectralMeasure& mu, const std::function<double(double)>& g);

double trace_moment(const SpectralMeasure& mu);
double zero_mass(const SpectralMeasure& mu);

// Hard edge: positive support reaching down to zero (MP with r = 1).
bool has_hard_edge(const SpectralMeasure& mu);

nlohmann::json to_json(const SpectralMeasure& mu);
SpectralMeasure measure_from_json(const nlohmann::json& j);

}  // namespace momdyn
