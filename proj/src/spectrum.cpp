#include "momdyn/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "momdyn/errors.hpp"

namespace momdyn {

SpectralMeasure mp_measure(double r, int nodes) {
    if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("mp_measure: r must be positive");
    if (nodes < 8) throw std::invalid_argument("mp_measure: need at least 8 quadrature nodes");

    SpectralMeasure mu;
    mu.kind = MeasureKind::MarchenkoPastur;
    mu.r = r;
    mu.nodes = nodes;
    mu.zero_mass = std::max(1.0 - r, 0.0);
    const double s = std::sqrt(1.0 / r);
    mu.lambda_minus = (1.0 - s) * (1.0 - s);
    mu.lambda_plus = (1.0 + s) * (1.0 + s);

    // lambda = c + h cos(t): the sqrt((l - l-)(l+ - l)) factor becomes h sin(t),
    // so the density times dlambda is r h^2 sin^2(t) / (2 pi lambda) dt, which is
    // finite even at the r = 1 hard edge. Midpoint rule in t.
    const double c = 0.5 * (mu.lambda_plus + mu.lambda_minus);
    const double h = 0.5 * (mu.lambda_plus - mu.lambda_minus);
    mu.lambda.resize(nodes);
    mu.weight.resize(nodes);
    double mass = mu.zero_mass;
    for (int k = 0; k < nodes; ++k) {
        const double t = (2.0 * k + 1.0) * std::numbers::pi / (2.0 * nodes);
        const double st = std::sin(t);
        double lam = c + h * std::cos(t);
        double w;
        if (mu.lambda_minus == 0.0) {
            // r = 1 (c = h = 2): write lambda and the weight in half-angle form so
            // the nodes next to the hard edge keep full relative precision.
            const double ch = std::cos(0.5 * t), sh = std::sin(0.5 * t);
            lam = 4.0 * ch * ch;
            w = r * 2.0 * sh * sh / nodes;
        } else {
            w = r * h * h * st * st / (2.0 * nodes * lam);
        }
        mu.lambda[k] = lam;
        mu.weight[k] = w;
        mass += w;
    }
    if (std::abs(mass - 1.0) > 1e-8)
        throw std::invalid_argument("mp_measure: too few nodes to resolve the density (mass " +
                                    std::to_string(mass) + ")");
    return mu;
}

SpectralMeasure esm_from_eigenvalues(std::vector<double> eigs) {
    if (eigs.empty()) throw std::invalid_argument("esm_from_eigenvalues: empty spectrum");
    double lmax = 0.0;
    for (double e : eigs) {
        if (!std::isfinite(e)) throw std::invalid_argument("esm_from_eigenvalues: non-finite eigenvalue");
        lmax = std::max(lmax, e);
    }
    const double tol = kZeroThreshold * lmax;
    for (double e : eigs)
        if (e < -tol) throw std::invalid_argument("esm_from_eigenvalues: negative eigenvalue");

    const double w = 1.0 / static_cast<double>(eigs.size());
    std::map<double, std::size_t> counts;
    std::size_t zeros = 0;
    for (double e : eigs) {
        if (e <= tol) ++zeros;
        else ++counts[e];
    }
    SpectralMeasure mu;
    mu.kind = MeasureKind::Discrete;
    mu.zero_mass = zeros * w;
    for (auto& [lam, cnt] : counts) {
        mu.lambda.push_back(lam);
        mu.weight.push_back(cnt * w);
    }
    if (!mu.lambda.empty()) {
        mu.lambda_minus = mu.lambda.front();
        mu.lambda_plus = mu.lambda.back();
    }
    return mu;
}

double integrate_positive(const SpectralMeasure& mu, const std::function<double(double)>& g) {
    double s = 0.0;
    for (std::size_t k = 0; k < mu.lambda.size(); ++k) {
        const double v = g(mu.lambda[k]);
        if (!std::isfinite(v))
            throw NumericalError("integrate: non-finite integrand at lambda=" + std::to_string(mu.lambda[k]));
        s += mu.weight[k] * v;
    }
    return s;
}

double integrate(const SpectralMeasure& mu, const std::function<double(double)>& g) {
    double s = integrate_positive(mu, g);
    if (mu.zero_mass > 0.0) {
        const double v0 = g(0.0);
        if (!std::isfinite(v0)) throw NumericalError("integrate: non-finite integrand at lambda=0");
        s += mu.zero_mass * v0;
    }
    return s;
}

double trace_moment(const SpectralMeasure& mu) {
    return integrate_positive(mu, [](double l) { return l; });
}

double zero_mass(const SpectralMeasure& mu) { return mu.zero_mass; }

bool has_hard_edge(const SpectralMeasure& mu) {
    return mu.kind == MeasureKind::MarchenkoPastur && mu.lambda_minus < 1e-14;
}

nlohmann::json to_json(const SpectralMeasure& mu) {
    nlohmann::json j;
    j["zero_mass"] = mu.zero_mass;
    j["lambda_minus"] = mu.lambda_minus;
    j["lambda_plus"] = mu.lambda_plus;
    j["m"] = trace_moment(mu);
    if (mu.kind == MeasureKind::MarchenkoPastur) {
        j["kind"] = "mp";
        j["r"] = mu.r;
        j["nodes"] = mu.nodes;
    } else {
        j["kind"] = "discrete";
        nlohmann::json atoms = nlohmann::json::array();
        for (std::size_t k = 0; k < mu.lambda.size(); ++k) atoms.push_back({mu.lambda[k], mu.weight[k]});
        j["atoms"] = atoms;
    }
    return j;
}

SpectralMeasure measure_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "mp") return mp_measure(j.at("r").get<double>(), j.value("nodes", 200));
    if (kind != "discrete") throw std::invalid_argument("measure_from_json: unknown kind " + kind);
    SpectralMeasure mu;
    mu.kind = MeasureKind::Discrete;
    mu.zero_mass = j.value("zero_mass", 0.0);
    double mass = mu.zero_mass;
    for (const auto& a : j.at("atoms")) {
        const double lam = a.at(0).get<double>(), w = a.at(1).get<double>();
        if (!(lam > 0.0) || w < 0.0) throw std::invalid_argument("measure_from_json: bad atom");
        mu.lambda.push_back(lam);
        mu.weight.push_back(w);
        mass += w;
    }
    if (std::abs(mass - 1.0) > 1e-8) throw std::invalid_argument("measure_from_json: total mass is not 1");
    if (!mu.lambda.empty()) {
        mu.lambda_minus = *std::min_element(mu.lambda.begin(), mu.lambda.end());
        mu.lambda_plus = *std::max_element(mu.lambda.begin(), mu.lambda.end());
    }
    return mu;
}

}  // namespace momdyn
