#include "momdyn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "momdyn/volterra.hpp"

namespace momdyn {

static KernelSpec conv_view(KernelSpec k) {
    if (k.schedule == Schedule::Power) k.mode = KernelMode::ConvolutionApprox;
    return k;
}

double kernel_norm(const KernelSpec& k, const SpectralMeasure& mu) {
    const double m = trace_moment(mu), p = mu.zero_mass;
    switch (k.schedule) {
        case Schedule::None: return k.gamma2 * m / 2.0;
        case Schedule::Exponential:
            if (!(k.theta > 0.0)) throw std::invalid_argument("kernel_norm: SDAHB needs theta > 0");
            if (k.gamma2 == 0.0) return k.gamma1 * m / (2.0 * k.theta);
            return kernel_norm_modes(modes_from_measure(mu, 0.0, 0.0), k);
        case Schedule::Power:
            if (!(k.gamma2 > 0.0)) throw std::invalid_argument("kernel_norm: SDANA needs gamma2 > 0");
            return k.gamma1 * (1.0 - p) / (2.0 * k.gamma2) + k.gamma2 * m / 2.0;
    }
    throw std::invalid_argument("kernel_norm: unknown schedule");
}

double kernel_norm(const AlgoParams& a, const SpectralMeasure& mu, int n) { return kernel_norm(a.continuous(n), mu); }

double limiting_loss(double R_tilde, double p, double norm) {
    if (!(norm < 1.0)) throw std::invalid_argument("limiting_loss: kernel norm must be < 1");
    return R_tilde * p / (2.0 * (1.0 - norm));
}

double laplace_transform(const KernelSpec& k, const SpectralMeasure& mu, double x) {
    const KernelSpec c = conv_view(k);
    double s = 0.0;
    for (std::size_t q = 0; q < mu.size(); ++q) s += mu.weight[q] * convolution_kernel_osc(c, mu.lambda[q]).laplace(x);
    return s;
}

double malthusian_cap(const KernelSpec& k, const SpectralMeasure& mu) {
    const KernelSpec c = conv_view(k);
    double cap = std::numeric_limits<double>::infinity();
    auto consider = [&](double lam) {
        if (lam > 0.0) cap = std::min(cap, convolution_kernel_osc(c, lam).decay_rate());
    };
    for (double lam : mu.lambda) consider(lam);
    if (mu.kind == MeasureKind::MarchenkoPastur) {
        consider(mu.lambda_minus);
        consider(mu.lambda_plus);
    }
    return cap;
}

std::optional<double> malthusian_exponent(const KernelSpec& k, const SpectralMeasure& mu) {
    if (mu.size() == 0 || !(mu.lambda_minus > 0.0)) return std::nullopt;
    const double cap = malthusian_cap(k, mu);
    if (!(cap > 0.0) || !std::isfinite(cap)) return std::nullopt;
    auto F = [&](double x) {
        const double v = laplace_transform(k, mu, x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    if (!(F(0.0) < 1.0)) return std::nullopt;
    // At the cap an atom may sit exactly on the pole; treat that as +inf.
    const double fcap = F(cap);
    if (std::isfinite(fcap) && fcap >= 0.0 && fcap < 1.0) return std::nullopt;
    double lo = 0.0, hi = cap;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double v = F(mid);
        if (v < 1.0 && v >= 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::optional<double> rate_lower_bound(const AlgoParams& a, const SpectralMeasure& mu, int n) {
    const double lm = mu.lambda_minus;
    if (!(lm > 0.0)) return std::nullopt;
    const KernelSpec k = a.continuous(n);
    switch (k.schedule) {
        case Schedule::None: return k.gamma2 * lm;
        case Schedule::Exponential:
            if (k.gamma2 != 0.0) return std::nullopt;
            return k.gamma1 * lm * k.theta / (2.0 * k.gamma1 * lm + k.theta * k.theta);
        case Schedule::Power: return 3.0 / 8.0 * std::min(lm / trace_moment(mu), 0.5);
    }
    return std::nullopt;
}

AnalysisReport rate_report(const AlgoParams& a, const SpectralMeasure& mu, int n, double R_tilde) {
    AnalysisReport r;
    const KernelSpec k = a.continuous(n);
    r.algo = algo_name(a.name);
    r.m = trace_moment(mu);
    r.p = mu.zero_mass;
    r.lambda_minus = mu.lambda_minus;
    r.lambda_plus = mu.lambda_plus;
    r.R_tilde = R_tilde;
    r.kernel_norm = kernel_norm(k, mu);
    r.convergent = r.kernel_norm < 1.0;
    if (r.convergent) r.limiting_loss = limiting_loss(R_tilde, r.p, r.kernel_norm);
    else r.notes.push_back("kernel norm >= 1: the loss does not converge");

    if (mu.lambda_minus > 0.0 && mu.size() > 0) {
        r.cap = malthusian_cap(k, mu);
        r.malthusian = malthusian_exponent(k, mu);
        if (r.convergent) {
            r.rate = r.malthusian ? *r.malthusian : r.cap;
            if (!r.malthusian) r.notes.push_back("no root below the cap: rate set by the forcing");
            r.rate_upper_bound = r.cap;
            r.rate_lower_bound = rate_lower_bound(a, mu, n);
        }
    } else {
        r.notes.push_back("spectrum reaches 0: no linear rate");
    }
    if (has_hard_edge(mu)) {
        // Density ~ lambda^{-1/2} at the hard edge.
        const double alpha = 0.5;
        if (k.schedule == Schedule::Power) {
            if (k.theta > 2.0 * alpha + 2.0) r.poly_exponents = std::make_pair(-2.0 * alpha - 2.0, -2.0 * alpha);
            else r.notes.push_back("theta <= 2 alpha + 2: power-law exponents not available");
        } else {
            r.poly_exponents = std::make_pair(-1.0 - alpha, -alpha);
        }
    }
    return r;
}

nlohmann::json AnalysisReport::to_json() const {
    nlohmann::json j;
    j["algo"] = algo;
    j["measure"] = {{"m", m}, {"p", p}, {"lambda_minus", lambda_minus}, {"lambda_plus", lambda_plus}};
    j["kernel_norm"] = kernel_norm;
    j["convergent"] = convergent;
    j["R_tilde"] = R_tilde;
    j["limiting_loss"] = limiting_loss ? nlohmann::json(*limiting_loss) : nlohmann::json(nullptr);
    j["malthusian"] = malthusian ? nlohmann::json(*malthusian) : nlohmann::json(nullptr);
    j["cap"] = cap;
    j["rate"] = rate;
    j["rate_lower_bound"] = rate_lower_bound ? nlohmann::json(*rate_lower_bound) : nlohmann::json(nullptr);
    j["rate_upper_bound"] = rate_upper_bound ? nlohmann::json(*rate_upper_bound) : nlohmann::json(nullptr);
    if (poly_exponents)
        j["predicted_poly_exponents"] = {{"signal", poly_exponents->first}, {"noise", poly_exponents->second}};
    else
        j["predicted_poly_exponents"] = nullptr;
    j["notes"] = notes;
    return j;
}

double fit_poly_rate(const std::vector<double>& t, const std::vector<double>& v, double t0, double t1) {
    if (t.size() != v.size()) throw std::invalid_argument("fit_poly_rate: size mismatch");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t0 || t[i] > t1) continue;
        if (!(t[i] > 0.0) || !(v[i] > 0.0)) throw std::invalid_argument("fit_poly_rate: values must be positive");
        const double x = std::log(t[i]), y = std::log(v[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
    }
    if (cnt < 2) throw std::invalid_argument("fit_poly_rate: fewer than two points in the window");
    const double den = cnt * sxx - sx * sx;
    if (den == 0.0) throw std::invalid_argument("fit_poly_rate: degenerate window");
    return (cnt * sxy - sx * sy) / den;
}

}  // namespace momdyn
