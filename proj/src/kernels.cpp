#include "momdyn/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "momdyn/errors.hpp"

namespace momdyn {

std::string algo_name(Algo a) {
    switch (a) {
        case Algo::SGD: return "sgd";
        case Algo::SHB: return "shb";
        case Algo::SDAHB: return "sdahb";
        case Algo::SDANA: return "sdana";
        case Algo::Custom: return "custom";
    }
    return "custom";
}

Algo parse_algo(const std::string& s) {
    if (s == "sgd") return Algo::SGD;
    if (s == "shb") return Algo::SHB;
    if (s == "sdahb") return Algo::SDAHB;
    if (s == "sdana") return Algo::SDANA;
    if (s == "custom") return Algo::Custom;
    throw std::invalid_argument("unknown algorithm: " + s);
}

std::string mode_name(KernelMode m) {
    switch (m) {
        case KernelMode::ClosedForm: return "closed";
        case KernelMode::OdeExact: return "ode";
        case KernelMode::ConvolutionApprox: return "conv";
    }
    return "closed";
}

KernelMode parse_mode(const std::string& s) {
    if (s == "closed") return KernelMode::ClosedForm;
    if (s == "ode") return KernelMode::OdeExact;
    if (s == "conv") return KernelMode::ConvolutionApprox;
    throw std::invalid_argument("unknown kernel mode: " + s);
}

double KernelSpec::Phi(double t) const {
    switch (schedule) {
        case Schedule::None: return 0.0;
        case Schedule::Exponential: return theta;
        case Schedule::Power: return theta / (1.0 + t);
    }
    return 0.0;
}

double KernelSpec::dPhi(double t) const {
    return schedule == Schedule::Power ? -theta / ((1.0 + t) * (1.0 + t)) : 0.0;
}

double KernelSpec::ddPhi(double t) const {
    return schedule == Schedule::Power ? 2.0 * theta / ((1.0 + t) * (1.0 + t) * (1.0 + t)) : 0.0;
}

double KernelSpec::log_phi(double t) const {
    switch (schedule) {
        case Schedule::None: return 0.0;
        case Schedule::Exponential: return theta * t;
        case Schedule::Power: return theta * std::log1p(t);
    }
    return 0.0;
}

bool KernelSpec::is_convolution() const {
    return schedule != Schedule::Power || mode == KernelMode::ConvolutionApprox;
}

KernelSpec sgd_spec(double gamma) {
    KernelSpec k;
    k.algo = Algo::SGD;
    k.gamma2 = gamma;
    return k;
}

KernelSpec sdahb_spec(double gamma1, double theta, double gamma2) {
    KernelSpec k;
    k.algo = Algo::SDAHB;
    k.gamma1 = gamma1;
    k.gamma2 = gamma2;
    k.theta = theta;
    k.schedule = Schedule::Exponential;
    return k;
}

KernelSpec sdana_spec(double gamma1, double gamma2, double theta, KernelMode mode) {
    KernelSpec k;
    k.algo = Algo::SDANA;
    k.gamma1 = gamma1;
    k.gamma2 = gamma2;
    k.theta = theta;
    k.schedule = Schedule::Power;
    k.mode = mode;
    return k;
}

// ---------------------------------------------------------------------------

static constexpr double kSeriesOmega = 1e-8;

double osc(double omega, double x) {
    if (std::abs(omega) < kSeriesOmega) return x * x / 2.0 - omega * x * x * x * x / 24.0;
    if (omega > 0.0) {
        const double h = 0.5 * x * std::sqrt(omega);
        const double s = std::sin(h);
        return 2.0 * s * s / omega;  // 1 - cos(2h) = 2 sin^2 h
    }
    const double h = 0.5 * x * std::sqrt(-omega);
    const double s = std::sinh(h);
    return -2.0 * s * s / omega;  // (1 - cosh(2h)) / omega
}

double sn(double omega, double x) {
    if (std::abs(omega) < kSeriesOmega) return x - omega * x * x * x / 6.0;
    if (omega > 0.0) {
        const double q = std::sqrt(omega);
        return std::sin(x * q) / q;
    }
    const double q = std::sqrt(-omega);
    return std::sinh(x * q) / q;
}

double Oscillator::value(double t) const {
    if (omega >= 0.0 || std::abs(omega) * t * t < 1e-6) {
        return std::exp(-kappa * t) * (A + B * osc(omega, t) + C * sn(omega, t));
    }
    // Growing hyperbolic modes: combine with the exponential envelope before
    // evaluating so that exp(-kappa t) cosh(q t) never overflows.
    const double q = std::sqrt(-omega);
    const double ep = std::exp((q - kappa) * t);
    const double em = std::exp(-(q + kappa) * t);
    const double e0 = std::exp(-kappa * t);
    const double cosh_part = 0.5 * (ep + em);  // e^{-kt} cosh(qt)
    const double sinh_part = 0.5 * (ep - em);  // e^{-kt} sinh(qt)
    return A * e0 + (B / (q * q)) * (cosh_part - e0) + (C / q) * sinh_part;
}

double Oscillator::laplace(double x) const {
    const double s = kappa - x;
    const double d = s * s + omega;
    return A / s + B / (s * d) + C / d;
}

double Oscillator::decay_rate() const { return kappa - std::sqrt(std::max(-omega, 0.0)); }

// Moment-system solution e^{-kt}(A + B osc + C sn) from a(0), a'(0), a''(0).
static Oscillator from_initial(double kappa, double omega, double a0, double a1, double a2) {
    Oscillator o;
    o.kappa = kappa;
    o.omega = omega;
    o.A = a0;
    o.C = kappa * a0 + a1;
    o.B = kappa * kappa * a0 + 2.0 * kappa * a1 + a2;
    return o;
}

Oscillator sdahb_forcing_osc(double lambda, double gamma1, double gamma2, double theta) {
    const double kappa = lambda * gamma2 + theta;
    const double rho = lambda * gamma2 - theta;
    const double omega = 4.0 * lambda * gamma1 - rho * rho;
    Oscillator o;
    o.kappa = kappa;
    o.omega = omega;
    o.A = 0.5;
    o.B = 0.5 * rho * rho - gamma1 * lambda;
    o.C = -0.5 * rho;
    return o;
}

Oscillator sdahb_kernel_osc(double lambda, double gamma1, double gamma2, double theta) {
    const double kappa = lambda * gamma2 + theta;
    const double rho = lambda * gamma2 - theta;
    const double omega = 4.0 * lambda * gamma1 - rho * rho;
    const double a0 = gamma2 * gamma2;
    const double a1 = 2.0 * gamma1 * gamma2 - 2.0 * gamma2 * gamma2 * gamma2 * lambda;
    const double db = 2.0 * lambda * gamma2 * gamma2 + theta * gamma2 - gamma1;
    const double a2 = -2.0 * gamma2 * lambda * a1 - 2.0 * gamma1 * db;
    Oscillator o = from_initial(kappa, omega, a0, a1, a2);
    const double l2 = lambda * lambda;
    o.A *= l2;
    o.B *= l2;
    o.C *= l2;
    return o;
}

Oscillator sdana_conv_osc(double lambda, double gamma1, double gamma2) {
    const double w = 4.0 * gamma1 - gamma2 * gamma2 * lambda;
    const double l2 = lambda * lambda;
    Oscillator o;
    o.kappa = lambda * gamma2;
    o.omega = lambda * w;
    o.A = l2 * gamma2 * gamma2;
    o.B = l2 * (2.0 * gamma1 * gamma1 - lambda * gamma2 * gamma2 * w);
    o.C = l2 * (2.0 * gamma1 - gamma2 * gamma2 * lambda) * gamma2;
    return o;
}

double sgd_forcing(double lambda, double gamma, double t) { return 0.5 * std::exp(-2.0 * gamma * lambda * t); }

double sgd_kernel(double lambda, double gamma, double tau) {
    return gamma * gamma * lambda * lambda * std::exp(-2.0 * gamma * lambda * tau);
}

double sdahb_forcing(double lambda, double gamma1, double theta, double t) {
    return sdahb_forcing_osc(lambda, gamma1, 0.0, theta).value(t);
}

double sdahb_kernel(double lambda, double gamma1, double theta, double tau) {
    // 2 gamma1^2 lambda^2 e^{-theta tau} osc(4 lambda gamma1 - theta^2, tau), evaluated
    // through the oscillator so the hyperbolic branch cannot overflow.
    return sdahb_kernel_osc(lambda, gamma1, 0.0, theta).value(tau);
}

double general_sdahb_forcing(double lambda, double gamma1, double gamma2, double theta, double t) {
    return sdahb_forcing_osc(lambda, gamma1, gamma2, theta).value(t);
}

double general_sdahb_kernel(double lambda, double gamma1, double gamma2, double theta, double tau) {
    return sdahb_kernel_osc(lambda, gamma1, gamma2, theta).value(tau);
}

double sdana_kernel_conv(double lambda, double gamma1, double gamma2, double /*theta*/, double tau) {
    return sdana_conv_osc(lambda, gamma1, gamma2).value(tau);
}

static OscillatorParams phase_of(const Oscillator& o, double rho) {
    OscillatorParams p;
    p.omega = o.omega;
    p.rho = rho;
    p.oscillatory = o.omega > 0.0;
    if (p.oscillatory) {
        const double c = o.A * o.omega + o.B;  // omega times the amplitude
        p.cos_phase = o.B / c;
        p.sin_phase = o.C * std::sqrt(o.omega) / c;
    }
    return p;
}

OscillatorParams sdahb_oscillator(double lambda, double gamma1, double gamma2, double theta) {
    return phase_of(sdahb_forcing_osc(lambda, gamma1, gamma2, theta), lambda * gamma2 - theta);
}

OscillatorParams sdana_oscillator(double lambda, double gamma1, double gamma2) {
    OscillatorParams p = phase_of(sdana_conv_osc(lambda, gamma1, gamma2), 0.0);
    p.omega = 4.0 * gamma1 - gamma2 * gamma2 * lambda;
    return p;
}

// ---------------------------------------------------------------------------
// Third-order ODE for J = phi^2 times the second moment:
//   J''' + c2 J'' + c1 J' + c0 J = 0.

namespace {

struct JCoeffs {
    double c2, c1, c0;
};

JCoeffs jcoeffs(const KernelSpec& k, double lambda, double t) {
    const double P = k.Phi(t), dP = k.dPhi(t), ddP = k.ddPhi(t);
    const double g1 = k.gamma1, g2 = k.gamma2, l = lambda;
    JCoeffs c;
    c.c2 = -3.0 * P + 3.0 * g2 * l;
    c.c1 = -5.0 * dP + 2.0 * P * P - 4.0 * g2 * l * P + 4.0 * g1 * l + 2.0 * g2 * g2 * l * l;
    c.c0 = -2.0 * ddP + 4.0 * P * dP - 4.0 * g2 * l * dP - 4.0 * g1 * l * P + 4.0 * g1 * g2 * l * l;
    return c;
}

using State = std::array<double, 3>;

State rhs(const KernelSpec& k, double lambda, double t, const State& y) {
    const JCoeffs c = jcoeffs(k, lambda, t);
    return {y[1], y[2], -c.c2 * y[2] - c.c1 * y[1] - c.c0 * y[0]};
}

void rk4(const KernelSpec& k, double lambda, double& t, State& y, double h) {
    auto add = [](const State& a, const State& b, double s) {
        return State{a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]};
    };
    const State k1 = rhs(k, lambda, t, y);
    const State k2 = rhs(k, lambda, t + 0.5 * h, add(y, k1, 0.5 * h));
    const State k3 = rhs(k, lambda, t + 0.5 * h, add(y, k2, 0.5 * h));
    const State k4 = rhs(k, lambda, t + h, add(y, k3, h));
    for (int i = 0; i < 3; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    t += h;
}

// J at each grid point (grid[0] >= t0), with the given step bound.
std::vector<double> integrate_j(const KernelSpec& k, double lambda, double t0, State y,
                                const std::vector<double>& grid, double hmax) {
    std::vector<double> out(grid.size());
    double t = t0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double span = grid[i] - t;
        if (span < -1e-12) throw std::invalid_argument("ode: grid must be increasing and start at or after s");
        if (span > 0.0) {
            const int m = static_cast<int>(std::ceil(span / hmax - 1e-9));
            const double h = span / m;
            for (int j = 0; j < m; ++j) rk4(k, lambda, t, y, h);
            t = grid[i];
        }
        if (!std::isfinite(y[0])) throw NumericalError("ode: non-finite solution");
        out[i] = y[0];
    }
    return out;
}

std::vector<double> solve_checked(const KernelSpec& k, double lambda, double t0, const State& y0,
                                  const std::vector<double>& grid, const OdeOptions& opt,
                                  const std::function<double(double, double)>& scale) {
    const double h = ode_step(lambda, k.gamma2) * opt.step_scale;
    std::vector<double> j = integrate_j(k, lambda, t0, y0, grid, h);
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = scale(grid[i], j[i]);
    if (opt.check_step) {
        const std::vector<double> j2 = integrate_j(k, lambda, t0, y0, grid, 0.5 * h);
        double diff = 0.0, mag = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double v2 = scale(grid[i], j2[i]);
            diff = std::max(diff, std::abs(v2 - v[i]));
            mag = std::max(mag, std::abs(v2));
        }
        if (diff > opt.check_tol * std::max(mag, 1e-300))
            throw NumericalError("ode: step too large (halving changed the solution by " + std::to_string(diff) + ")");
    }
    return v;
}

}  // namespace

double ode_step(double lambda, double gamma2) { return std::min(0.01, 0.1 / (1.0 + gamma2 * lambda)); }

std::vector<double> forcing_ode(const KernelSpec& k, double lambda, const std::vector<double>& grid,
                                const OdeOptions& opt) {
    if (lambda == 0.0) return std::vector<double>(grid.size(), 0.5);
    const double P = k.Phi(0.0), dP = k.dPhi(0.0);
    const double d1 = 2.0 * P - 2.0 * k.gamma2 * lambda;
    const State y0{1.0, d1, d1 * d1 - 2.0 * k.gamma1 * lambda + 2.0 * dP};
    // G = J / (2 phi^2)
    return solve_checked(k, lambda, 0.0, y0, grid, opt,
                         [&](double t, double j) { return 0.5 * j * std::exp(-2.0 * k.log_phi(t)); });
}

std::vector<double> kernel_ode(const KernelSpec& k, double lambda, double s, const std::vector<double>& grid,
                               const OdeOptions& opt) {
    if (lambda == 0.0) return std::vector<double>(grid.size(), 0.0);
    const double P = k.Phi(s), dP = k.dPhi(s);
    const double g1 = k.gamma1, g2 = k.gamma2, l = lambda;
    const State y0{
        g2 * g2,
        2.0 * g2 * g1 + 2.0 * g2 * g2 * (P - g2 * l),
        2.0 * g1 * (g1 + 3.0 * g2 * P - 4.0 * g2 * g2 * l) +
            2.0 * g2 * g2 * (dP + 2.0 * P * P - 4.0 * g2 * l * P + 2.0 * g2 * g2 * l * l)};
    // K = lambda^2 phi(s)^2 Jhat_s(t) / phi(t)^2
    const double ls = k.log_phi(s);
    return solve_checked(k, lambda, s, y0, grid, opt, [&](double t, double j) {
        return l * l * j * std::exp(2.0 * (ls - k.log_phi(t)));
    });
}

std::vector<double> sdana_forcing_ode(double lambda, double gamma1, double gamma2, double theta,
                                      const std::vector<double>& grid, const OdeOptions& opt) {
    return forcing_ode(sdana_spec(gamma1, gamma2, theta, KernelMode::OdeExact), lambda, grid, opt);
}

std::vector<double> sdana_kernel_ode(double lambda, double gamma1, double gamma2, double theta, double s,
                                     const std::vector<double>& grid, const OdeOptions& opt) {
    return kernel_ode(sdana_spec(gamma1, gamma2, theta, KernelMode::OdeExact), lambda, s, grid, opt);
}

std::vector<double> forcing_values(const KernelSpec& k, double lambda, const std::vector<double>& grid) {
    std::vector<double> v(grid.size());
    if (k.schedule == Schedule::Power || k.mode == KernelMode::OdeExact) return forcing_ode(k, lambda, grid);
    if (k.schedule == Schedule::None) {
        for (std::size_t i = 0; i < grid.size(); ++i) v[i] = sgd_forcing(lambda, k.gamma2, grid[i]);
        return v;
    }
    const Oscillator o = sdahb_forcing_osc(lambda, k.gamma1, k.gamma2, k.theta);
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = o.value(grid[i]);
    return v;
}

Oscillator convolution_kernel_osc(const KernelSpec& k, double lambda) {
    switch (k.schedule) {
        case Schedule::None: {
            Oscillator o;
            o.kappa = 2.0 * k.gamma2 * lambda;
            o.A = k.gamma2 * k.gamma2 * lambda * lambda;
            return o;
        }
        case Schedule::Exponential: return sdahb_kernel_osc(lambda, k.gamma1, k.gamma2, k.theta);
        case Schedule::Power:
            if (k.mode != KernelMode::ConvolutionApprox)
                throw std::invalid_argument("convolution kernel requested for a two-time kernel");
            return sdana_conv_osc(lambda, k.gamma1, k.gamma2);
    }
    throw std::invalid_argument("convolution_kernel_osc: unknown schedule");
}

double convolution_kernel(const KernelSpec& k, double lambda, double tau) {
    return convolution_kernel_osc(k, lambda).value(tau);
}

}  // namespace momdyn
