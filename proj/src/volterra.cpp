#include "momdyn/volterra.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "momdyn/errors.hpp"

namespace momdyn {

std::vector<double> uniform_grid(double h, double T) {
    if (!(h > 0.0) || !(T >= 0.0)) throw std::invalid_argument("uniform_grid: need h > 0 and T >= 0");
    const long long N = std::llround(T / h);
    if (std::abs(N * h - T) > 1e-9 * std::max(1.0, T))
        throw std::invalid_argument("uniform_grid: T must be a multiple of h");
    std::vector<double> g(N + 1);
    for (long long i = 0; i <= N; ++i) g[i] = i * h;
    return g;
}

ModeTable modes_from_measure(const SpectralMeasure& mu, double R, double R_tilde) {
    ModeTable m;
    m.lambda = mu.lambda;
    m.kweight = mu.weight;
    m.fweight.resize(mu.size());
    for (std::size_t k = 0; k < mu.size(); ++k) m.fweight[k] = mu.weight[k] * (R * mu.lambda[k] + R_tilde);
    m.f_zero = 0.5 * mu.zero_mass * R_tilde;
    return m;
}

ModeTable modes_from_spectral(const SpectralProblem& sp) {
    ModeTable m;
    const int n = sp.n();
    double lmax = 0.0;
    for (int j = 0; j < n; ++j) lmax = std::max(lmax, sp.sigma(j) * sp.sigma(j));
    for (int j = 0; j < n; ++j) {
        const double lam = sp.sigma(j) * sp.sigma(j);
        const double e = sp.sigma(j) * sp.init_coords(j) - sp.noise_coords(j);
        if (lam <= kZeroThreshold * lmax) {
            m.f_zero += 0.5 * e * e;
            continue;
        }
        m.lambda.push_back(lam);
        m.kweight.push_back(1.0 / n);
        m.fweight.push_back(e * e);
    }
    return m;
}

std::vector<double> build_forcing(const ModeTable& modes, const KernelSpec& k, const std::vector<double>& grid) {
    std::vector<double> F(grid.size(), modes.f_zero);
    for (std::size_t q = 0; q < modes.lambda.size(); ++q) {
        if (modes.fweight[q] == 0.0) continue;
        const auto g = forcing_values(k, modes.lambda[q], grid);
        for (std::size_t i = 0; i < grid.size(); ++i) F[i] += modes.fweight[q] * g[i];
    }
    for (double v : F)
        if (!std::isfinite(v)) throw NumericalError("build_forcing: non-finite forcing");
    return F;
}

std::vector<double> build_forcing(const SpectralMeasure& mu, const KernelSpec& k, double R, double R_tilde,
                                  const std::vector<double>& grid) {
    return build_forcing(modes_from_measure(mu, R, R_tilde), k, grid);
}

std::vector<double> build_convolution_kernel(const ModeTable& modes, const KernelSpec& k,
                                             const std::vector<double>& grid) {
    std::vector<double> I(grid.size(), 0.0);
    for (std::size_t q = 0; q < modes.lambda.size(); ++q) {
        const Oscillator o = convolution_kernel_osc(k, modes.lambda[q]);
        for (std::size_t i = 0; i < grid.size(); ++i) I[i] += modes.kweight[q] * o.value(grid[i]);
    }
    for (double v : I)
        if (!std::isfinite(v)) throw NumericalError("build_convolution_kernel: non-finite kernel");
    return I;
}

std::vector<double> build_convolution_kernel(const SpectralMeasure& mu, const KernelSpec& k,
                                             const std::vector<double>& grid) {
    return build_convolution_kernel(modes_from_measure(mu, 0.0, 0.0), k, grid);
}

// ---------------------------------------------------------------------------

namespace {

// Weight of node j in the quadrature over [0, t_i] (in units of h).
inline double qweight(Quadrature q, int i, int j) {
    if (q == Quadrature::Trapezoid || i == 1) return (j == 0 || j == i) ? 0.5 : 1.0;
    auto simpson = [](int n, int j) {  // Simpson on [0, n], n even
        if (j == 0 || j == n) return 1.0 / 3.0;
        return (j % 2) ? 4.0 / 3.0 : 2.0 / 3.0;
    };
    if (i % 2 == 0) return simpson(i, j);
    const int m = i - 3;
    double w = 0.0;
    if (m > 0 && j <= m) w += simpson(m, j);
    if (j == m || j == i) w += 3.0 / 8.0;
    else if (j == m + 1 || j == m + 2) w += 9.0 / 8.0;
    return w;
}

// kern(i, j) = K_{t_j}(t_i) for j <= i; khalf = K_{h/2}(h).
using IndexKernel = std::function<double(int i, int j)>;

bool simpson_start(const SolveOptions& opt, int N) { return opt.quadrature == Quadrature::Simpson && N >= 2; }

double row_sum(const IndexKernel& kern, const std::vector<double>& psi, Quadrature q, int i, int upto) {
    double s = 0.0;
    for (int j = 0; j <= upto; ++j) s += qweight(q, i, j) * kern(i, j) * psi[j];
    return s;
}

void check_nonneg(VolterraSolution& sol) {
    double mx = 0.0;
    for (double v : sol.psi) mx = std::max(mx, std::abs(v));
    sol.nonnegative = true;
    for (double v : sol.psi)
        if (v < -1e-10 * std::max(mx, 1e-300)) sol.nonnegative = false;
}

double residual(const std::vector<double>& F, const IndexKernel& kern, double h, const std::vector<double>& psi,
                const SolveOptions& opt) {
    const int N = static_cast<int>(F.size()) - 1;
    const int first = simpson_start(opt, N) ? 3 : 1;
    double r = 0.0;
    for (int i = first; i <= N; ++i)
        r = std::max(r, std::abs(psi[i] - F[i] - h * row_sum(kern, psi, opt.quadrature, i, i)));
    return r;
}

VolterraSolution march(const std::vector<double>& F, const IndexKernel& kern, double khalf, double h,
                       const SolveOptions& opt) {
    const int N = static_cast<int>(F.size()) - 1;
    std::vector<double> psi(N + 1, 0.0);
    psi[0] = F[0];
    int first = 1;
    if (simpson_start(opt, N)) {
        const double k10 = kern(1, 0), k11 = kern(1, 1), k20 = kern(2, 0), k21 = kern(2, 1), k22 = kern(2, 2);
        Eigen::Matrix2d M;
        M << 1.0 - h / 6.0 * (4.0 * khalf * 6.0 / 8.0 + k11), h / 6.0 * 4.0 * khalf / 8.0,
            -h / 3.0 * 4.0 * k21, 1.0 - h / 3.0 * k22;
        Eigen::Vector2d rhs(F[1] + h / 6.0 * (k10 + 4.0 * khalf * 3.0 / 8.0) * psi[0],
                            F[2] + h / 3.0 * k20 * psi[0]);
        if (!(M(0, 0) > 0.0) || !(M(1, 1) > 0.0))
            throw NumericalError("volterra: step too large for the kernel (1 - h w K(0) <= 0)");
        const Eigen::Vector2d x = M.partialPivLu().solve(rhs);
        psi[1] = x(0);
        psi[2] = x(1);
        first = 3;
    }
    for (int i = first; i <= N; ++i) {
        const double s = row_sum(kern, psi, opt.quadrature, i, i - 1);
        const double denom = 1.0 - h * qweight(opt.quadrature, i, i) * kern(i, i);
        if (!(denom > 0.0)) throw NumericalError("volterra: step too large for the kernel (1 - h w K(0) <= 0)");
        psi[i] = (F[i] + h * s) / denom;
        if (!std::isfinite(psi[i])) throw NumericalError("volterra: non-finite solution");
    }
    VolterraSolution sol;
    sol.F = F;
    sol.psi = std::move(psi);
    sol.h = h;
    sol.method = "marching";
    sol.residual = residual(F, kern, h, sol.psi, opt);
    check_nonneg(sol);
    return sol;
}

VolterraSolution picard(const std::vector<double>& F, const IndexKernel& kern, double khalf, double h,
                        const SolveOptions& opt) {
    const int N = static_cast<int>(F.size()) - 1;
    std::vector<double> psi = F, next(N + 1);
    const bool block = simpson_start(opt, N);
    for (int it = 1; it <= opt.picard_max_iter; ++it) {
        next[0] = F[0];
        for (int i = 1; i <= N; ++i) {
            if (block && i == 1) {
                const double half = (3.0 * psi[0] + 6.0 * psi[1] - psi[2]) / 8.0;
                next[1] = F[1] + h / 6.0 * (kern(1, 0) * psi[0] + 4.0 * khalf * half + kern(1, 1) * psi[1]);
            } else {
                next[i] = F[i] + h * row_sum(kern, psi, opt.quadrature, i, i);
            }
        }
        double change = 0.0;
        for (int i = 0; i <= N; ++i) change = std::max(change, std::abs(next[i] - psi[i]));
        psi.swap(next);
        if (!std::isfinite(change)) throw NumericalError("picard: iteration diverged");
        if (change < opt.picard_tol) {
            VolterraSolution sol;
            sol.F = F;
            sol.psi = psi;
            sol.h = h;
            sol.method = "picard";
            sol.picard_iters = it;
            sol.residual = residual(F, kern, h, sol.psi, opt);
            check_nonneg(sol);
            return sol;
        }
    }
    throw NumericalError("picard: no convergence within " + std::to_string(opt.picard_max_iter) + " iterations");
}

VolterraSolution dispatch(const std::vector<double>& F, const IndexKernel& kern, double khalf, double h,
                          const SolveOptions& opt) {
    if (F.empty()) throw std::invalid_argument("volterra: empty forcing");
    if (!(h > 0.0)) throw std::invalid_argument("volterra: step must be positive");
    VolterraSolution sol = opt.method == SolveMethod::Picard ? picard(F, kern, khalf, h, opt)
                                                              : march(F, kern, khalf, h, opt);
    sol.grid.resize(F.size());
    for (std::size_t i = 0; i < F.size(); ++i) sol.grid[i] = i * h;
    return sol;
}

}  // namespace

VolterraSolution solve_convolution(const std::vector<double>& F, const std::vector<double>& I, double h,
                                   const SolveOptions& opt, double I_half) {
    if (I.size() < F.size()) throw std::invalid_argument("solve_convolution: kernel table shorter than forcing");
    if (std::isnan(I_half) && I.size() >= 3) I_half = (3.0 * I[0] + 6.0 * I[1] - I[2]) / 8.0;
    const double* Ip = I.data();
    return dispatch(F, [Ip](int i, int j) { return Ip[i - j]; }, I_half, h, opt);
}

VolterraSolution solve_general(const std::vector<double>& F, const TwoTimeKernel& K, double h,
                               const SolveOptions& opt) {
    const double khalf = F.size() >= 3 ? K(0.5 * h, h) : 0.0;
    return dispatch(F, [&](int i, int j) { return K(j * h, i * h); }, khalf, h, opt);
}

// ---------------------------------------------------------------------------

VolterraSolution solve_state_space(const ModeTable& modes, const KernelSpec& k, double h, double T) {
    const auto grid = uniform_grid(h, T);
    const Eigen::Index M = static_cast<Eigen::Index>(modes.lambda.size());
    Eigen::ArrayXd lam(M), w(M);
    for (Eigen::Index q = 0; q < M; ++q) {
        lam(q) = modes.lambda[q];
        w(q) = modes.kweight[q];
    }
    const double g1 = k.gamma1, g2 = k.gamma2;
    const Eigen::ArrayXd l2 = lam * lam;
    // Columns: coupled a, b, c, then forcing-only a, b, c.
    Eigen::ArrayXXd Y = Eigen::ArrayXXd::Zero(M, 6);
    for (Eigen::Index q = 0; q < M; ++q) Y(q, 0) = Y(q, 3) = 0.5 * modes.fweight[q];

    auto rhs = [&](double t, const Eigen::ArrayXXd& S) {
        const double Phi = k.Phi(t);
        const double psi = modes.f_zero + S.col(0).sum();
        Eigen::ArrayXXd D(M, 6);
        for (int off : {0, 3}) {
            const double p = off == 0 ? psi : 0.0;
            const auto a = S.col(off), b = S.col(off + 1), c = S.col(off + 2);
            D.col(off) = -2.0 * g2 * lam * a - 2.0 * g1 * b + w * g2 * g2 * l2 * p;
            D.col(off + 1) = lam * a - (Phi + g2 * lam) * b - g1 * c - w * g2 * l2 * p;
            D.col(off + 2) = 2.0 * lam * b - 2.0 * Phi * c + w * l2 * p;
        }
        return D;
    };

    const double lmax = M > 0 ? lam.maxCoeff() : 0.0;
    const double stiff = 1.0 + g2 * lmax + std::abs(k.Phi(0.0)) + 2.0 * std::sqrt(std::max(g1 * lmax, 0.0));
    const double hsub_max = std::min({h, 0.01, 0.1 / stiff});
    const int m = static_cast<int>(std::ceil(h / hsub_max - 1e-9));
    const double hs = h / m;

    VolterraSolution sol;
    sol.grid = grid;
    sol.h = h;
    sol.method = "state-space";
    sol.psi.resize(grid.size());
    sol.F.resize(grid.size());
    double t = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i > 0) {
            for (int s = 0; s < m; ++s) {
                const Eigen::ArrayXXd k1 = rhs(t, Y);
                const Eigen::ArrayXXd k2 = rhs(t + 0.5 * hs, Y + 0.5 * hs * k1);
                const Eigen::ArrayXXd k3 = rhs(t + 0.5 * hs, Y + 0.5 * hs * k2);
                const Eigen::ArrayXXd k4 = rhs(t + hs, Y + hs * k3);
                Y += hs / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                t += hs;
            }
            t = grid[i];
        }
        sol.psi[i] = modes.f_zero + Y.col(0).sum();
        sol.F[i] = modes.f_zero + Y.col(3).sum();
        if (!std::isfinite(sol.psi[i])) throw NumericalError("state-space solve: non-finite solution");
    }
    check_nonneg(sol);
    return sol;
}

double kernel_norm_modes(const ModeTable& modes, const KernelSpec& k) {
    KernelSpec c = k;
    if (c.schedule == Schedule::Power) c.mode = KernelMode::ConvolutionApprox;
    double s = 0.0;
    for (std::size_t q = 0; q < modes.lambda.size(); ++q)
        s += modes.kweight[q] * convolution_kernel_osc(c, modes.lambda[q]).laplace(0.0);
    return s;
}

double kernel_norm_numeric(const ModeTable& modes, const KernelSpec& k) {
    double total = 0.0;
    for (std::size_t q = 0; q < modes.lambda.size(); ++q) {
        const Oscillator o = convolution_kernel_osc(k, modes.lambda[q]);
        const double rate = o.decay_rate();
        if (!(rate > 0.0)) throw NumericalError("kernel_norm_numeric: kernel does not decay");
        const double tmax = 45.0 / rate;
        const double h0 = 0.05 / (o.kappa + std::sqrt(std::abs(o.omega)));
        long long n = static_cast<long long>(std::ceil(tmax / h0));
        n = std::clamp<long long>(n + (n % 2), 2000, 4000000);
        const double hh = tmax / n;
        double s = o.value(0.0) + o.value(tmax);
        for (long long i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * o.value(i * hh);
        total += modes.kweight[q] * s * hh / 3.0;
    }
    return total;
}

TwoTimeKernel tabulate_ode_kernel(const ModeTable& modes, const KernelSpec& k, double h, int N) {
    auto table = std::make_shared<std::vector<std::vector<double>>>(N + 1);
    for (int j = 0; j <= N; ++j) (*table)[j].assign(N - j + 1, 0.0);
    double half = 0.0;
    for (std::size_t q = 0; q < modes.lambda.size(); ++q) {
        const double lam = modes.lambda[q], wq = modes.kweight[q];
        for (int j = 0; j <= N; ++j) {
            std::vector<double> ts(N - j + 1);
            for (int i = j; i <= N; ++i) ts[i - j] = i * h;
            const auto v = kernel_ode(k, lam, j * h, ts);
            auto& row = (*table)[j];
            for (std::size_t r = 0; r < v.size(); ++r) row[r] += wq * v[r];
        }
        if (N >= 1) half += wq * kernel_ode(k, lam, 0.5 * h, {h})[0];
    }
    return [table, half, h, N](double s, double t) {
        const double js = s / h, it = t / h;
        const long long j = std::llround(js), i = std::llround(it);
        if (std::abs(js - j) < 1e-6 && std::abs(it - i) < 1e-6 && j >= 0 && i >= j && i <= N)
            return (*table)[j][i - j];
        if (std::abs(js - 0.5) < 1e-6 && std::abs(it - 1.0) < 1e-6) return half;
        throw std::invalid_argument("tabulated kernel queried off its grid");
    };
}

VolterraSolution predict(const ModeTable& modes, const KernelSpec& k, const PredictOptions& opt) {
    const auto grid = uniform_grid(opt.h, opt.T);
    if (k.is_convolution()) {
        std::vector<double> F = build_forcing(modes, k, grid);
        const auto I = build_convolution_kernel(modes, k, grid);
        const double I_half = build_convolution_kernel(modes, k, {0.5 * opt.h})[0];
        const bool weighted = k.schedule == Schedule::Power;
        std::vector<double> Fw = F;
        if (weighted)
            for (std::size_t i = 0; i < grid.size(); ++i) Fw[i] *= std::exp(k.log_phi(grid[i]));
        VolterraSolution sol = solve_convolution(Fw, I, opt.h, opt.solve, I_half);
        if (weighted) {
            for (std::size_t i = 0; i < grid.size(); ++i) sol.psi[i] *= std::exp(-k.log_phi(grid[i]));
            sol.method += "-phi-weighted";
        }
        sol.F = F;
        sol.kernel_norm = kernel_norm_modes(modes, k);
        return sol;
    }
    VolterraSolution sol;
    if (opt.exact_route == ExactRoute::StateSpace) {
        sol = solve_state_space(modes, k, opt.h, opt.T);
    } else {
        const auto F = build_forcing(modes, k, grid);
        const auto K = tabulate_ode_kernel(modes, k, opt.h, static_cast<int>(grid.size()) - 1);
        sol = solve_general(F, K, opt.h, opt.solve);
        sol.method += "-general";
    }
    sol.kernel_norm = kernel_norm_modes(modes, k);
    return sol;
}

nlohmann::json solution_metadata(const VolterraSolution& sol) {
    nlohmann::json j;
    j["h"] = sol.h;
    j["T"] = sol.grid.empty() ? 0.0 : sol.grid.back();
    j["method"] = sol.method;
    if (std::isfinite(sol.kernel_norm)) j["kernel_norm"] = sol.kernel_norm;
    j["residual"] = sol.residual;
    j["picard_iters"] = sol.picard_iters;
    j["nonnegative"] = sol.nonnegative;
    return j;
}

}  // namespace momdyn
