#include "momdyn/momentum.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

#include "momdyn/errors.hpp"
#include "momdyn/rng.hpp"

namespace momdyn {

double MomentumSchedule::delta(long long k, int n) const {
    switch (kind) {
        case Kind::None: return 1.0;
        case Kind::Constant: return theta;
        case Kind::DimConstant: return theta / n;
        case Kind::DimPower: return theta / (static_cast<double>(k) + n);
    }
    return 1.0;
}

double AlgoParams::gamma1_raw(int n) const {
    switch (name) {
        case Algo::SGD: return 0.0;
        case Algo::SHB: return gamma;
        case Algo::SDAHB: return gamma / n;
        case Algo::SDANA: return gamma1 / n;
        case Algo::Custom: return raw_gamma1;
    }
    return 0.0;
}

double AlgoParams::gamma2_raw(int /*n*/) const {
    switch (name) {
        case Algo::SGD: return gamma;
        case Algo::SHB: return 0.0;
        case Algo::SDAHB: return gamma2;
        case Algo::SDANA: return gamma2;
        case Algo::Custom: return raw_gamma2;
    }
    return 0.0;
}

MomentumSchedule AlgoParams::schedule() const {
    MomentumSchedule s;
    switch (name) {
        case Algo::SGD: s.kind = MomentumSchedule::Kind::None; break;
        case Algo::SHB: s.kind = MomentumSchedule::Kind::Constant; s.theta = theta; break;
        case Algo::SDAHB: s.kind = MomentumSchedule::Kind::DimConstant; s.theta = theta; break;
        case Algo::SDANA: s.kind = MomentumSchedule::Kind::DimPower; s.theta = theta; break;
        case Algo::Custom: s.kind = MomentumSchedule::Kind::Constant; s.theta = raw_delta; break;
    }
    return s;
}

KernelSpec AlgoParams::continuous(int n) const {
    KernelSpec k;
    switch (name) {
        case Algo::SGD: k = sgd_spec(gamma); break;
        case Algo::SHB:
            if (n <= 0) throw std::invalid_argument("shb: continuous-time view needs the problem size n");
            k = sdahb_spec(n * gamma, n * theta);
            break;
        case Algo::SDAHB: k = sdahb_spec(gamma, theta, gamma2); break;
        case Algo::SDANA: k = sdana_spec(gamma1, gamma2, theta, mode); break;
        case Algo::Custom:
            if (n <= 0) throw std::invalid_argument("custom: continuous-time view needs the problem size n");
            if (raw_gamma1 == 0.0) k = sgd_spec(raw_gamma2);
            else k = sdahb_spec(n * raw_gamma1, n * raw_delta, raw_gamma2);
            break;
    }
    k.algo = name;
    if (name != Algo::SDANA) k.mode = KernelMode::ClosedForm;
    return k;
}

nlohmann::json AlgoParams::to_json() const {
    nlohmann::json j;
    j["algo"] = algo_name(name);
    switch (name) {
        case Algo::SGD: j["gamma"] = gamma; break;
        case Algo::SHB: j["gamma"] = gamma; j["theta"] = theta; break;
        case Algo::SDAHB:
            j["gamma"] = gamma;
            j["theta"] = theta;
            if (gamma2 != 0.0) j["gamma2"] = gamma2;
            break;
        case Algo::SDANA:
            j["gamma1"] = gamma1;
            j["gamma2"] = gamma2;
            j["theta"] = theta;
            j["mode"] = mode_name(mode);
            break;
        case Algo::Custom:
            j["Gamma1"] = raw_gamma1;
            j["Gamma2"] = raw_gamma2;
            j["Delta"] = raw_delta;
            break;
    }
    return j;
}

static void require_finite_nonneg(double v, const char* what) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument(std::string(what) + " must be finite and >= 0");
}

AlgoParams sgd(double gamma) {
    require_finite_nonneg(gamma, "gamma");
    AlgoParams a;
    a.name = Algo::SGD;
    a.gamma = gamma;
    return a;
}

AlgoParams shb(double gamma, double theta) {
    require_finite_nonneg(gamma, "gamma");
    require_finite_nonneg(theta, "theta");
    AlgoParams a;
    a.name = Algo::SHB;
    a.gamma = gamma;
    a.theta = theta;
    return a;
}

AlgoParams sdahb(double gamma, double theta, double gamma2) {
    require_finite_nonneg(gamma, "gamma");
    require_finite_nonneg(theta, "theta");
    require_finite_nonneg(gamma2, "gamma2");
    AlgoParams a;
    a.name = Algo::SDAHB;
    a.gamma = gamma;
    a.theta = theta;
    a.gamma2 = gamma2;
    return a;
}

AlgoParams sdana(double gamma1, double gamma2, double theta) {
    require_finite_nonneg(gamma1, "gamma1");
    require_finite_nonneg(gamma2, "gamma2");
    require_finite_nonneg(theta, "theta");
    AlgoParams a;
    a.name = Algo::SDANA;
    a.gamma1 = gamma1;
    a.gamma2 = gamma2;
    a.theta = theta;
    a.mode = KernelMode::ConvolutionApprox;
    return a;
}

AlgoParams custom(double gamma1_raw, double gamma2_raw, double delta) {
    require_finite_nonneg(gamma1_raw, "Gamma1");
    require_finite_nonneg(gamma2_raw, "Gamma2");
    require_finite_nonneg(delta, "Delta");
    AlgoParams a;
    a.name = Algo::Custom;
    a.raw_gamma1 = gamma1_raw;
    a.raw_gamma2 = gamma2_raw;
    a.raw_delta = delta;
    return a;
}

AlgoParams defaults(Algo algo, double m, int n) {
    if (!(m > 0.0) || !std::isfinite(m)) throw std::invalid_argument("defaults: normalized trace m must be positive");
    switch (algo) {
        case Algo::SGD: return sgd(1.0 / m);
        case Algo::SDAHB: return sdahb(2.0 / m, 2.0);
        case Algo::SHB:
            if (n <= 0) throw std::invalid_argument("defaults: shb needs the problem size n");
            return shb(2.0 / m / n, 2.0 / n);
        case Algo::SDANA: return sdana(1.0 / (4.0 * m), 1.0 / m, 4.0);
        case Algo::Custom: break;
    }
    throw std::invalid_argument("defaults: no defaults for custom parameters");
}

AlgoParams defaults(Algo a, const SpectralMeasure& mu, int n) { return defaults(a, trace_moment(mu), n); }

// ---------------------------------------------------------------------------

namespace {

// Sample k_j = round(j n / spe) for j = 1..J, dropping repeats when n < spe.
std::vector<long long> sample_steps(int n, double epochs, int spe) {
    if (spe < 1) throw std::invalid_argument("samples_per_epoch must be >= 1");
    const long long total = std::llround(epochs * n);
    const long long J = static_cast<long long>(std::floor(epochs * spe + 1e-9));
    std::vector<long long> ks;
    for (long long j = 1; j <= J; ++j) {
        long long k = std::llround(static_cast<double>(j) * n / spe);
        k = std::min(k, total);
        if (k > 0 && (ks.empty() || k > ks.back())) ks.push_back(k);
    }
    return ks;
}

struct Stepper {
    const LsqProblem& p;
    double g1, g2;
    MomentumSchedule sched;
    Eigen::VectorXd x, y;
    std::mt19937_64 eng;
    std::uniform_int_distribution<int> pick;
    bool momentum;
    long long k = 0;

    Stepper(const LsqProblem& prob, const AlgoParams& a, std::uint64_t seed)
        : p(prob),
          g1(a.gamma1_raw(prob.n)),
          g2(a.gamma2_raw(prob.n)),
          sched(a.schedule()),
          x(prob.x0),
          y(Eigen::VectorXd::Zero(prob.d)),
          eng(make_engine(seed, Stream::Indices)),
          pick(0, prob.n - 1),
          momentum(g1 != 0.0) {
        if (!std::isfinite(g1) || !std::isfinite(g2)) throw std::invalid_argument("run: non-finite parameters");
    }

    // One iteration of the generic method. The sample direction is
    // (a_i x - b_i) a_i^T, i.e. the stochastic gradient divided by n.
    void step() {
        ++k;
        const int i = pick(eng);
        const auto a = p.A.row(i);
        const double res = a.dot(x) - p.b(i);
        if (momentum) {
            const double keep = 1.0 - sched.delta(k, p.n);
            y = keep * y + (g1 * res) * a.transpose();
            x -= (g2 * res) * a.transpose() + y;
        } else if (g2 != 0.0) {
            x -= (g2 * res) * a.transpose();
        }
    }
};

}  // namespace

Trajectory run(const LsqProblem& p, const AlgoParams& a, double epochs, std::uint64_t seed, const RunOptions& opt) {
    if (!(epochs > 0.0) || epochs * p.n < 1.0) throw std::invalid_argument("run: need at least one iteration");
    Stepper st(p, a, seed);
    Trajectory tr;
    tr.initial_value = loss(p, p.x0);
    const auto ks = sample_steps(p.n, epochs, opt.samples_per_epoch);
    tr.times.reserve(ks.size());
    tr.values.reserve(ks.size());
    for (long long target : ks) {
        while (st.k < target && !tr.diverged) st.step();
        const double t = static_cast<double>(target) / p.n;
        tr.times.push_back(t);
        if (tr.diverged) {
            tr.values.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        const double f = loss(p, st.x);
        if (!std::isfinite(f) || std::abs(f) > opt.divergence_threshold) {
            tr.diverged = true;
            tr.diverged_at = t;
            tr.values.push_back(std::numeric_limits<double>::quiet_NaN());
        } else {
            tr.values.push_back(f);
        }
    }
    return tr;
}

std::vector<Eigen::VectorXd> iterates(const LsqProblem& p, const AlgoParams& a, long long steps, std::uint64_t seed) {
    Stepper st(p, a, seed);
    std::vector<Eigen::VectorXd> xs;
    xs.reserve(steps + 1);
    xs.push_back(st.x);
    for (long long k = 0; k < steps; ++k) {
        st.step();
        xs.push_back(st.x);
    }
    return xs;
}

Trajectory aggregate(const std::vector<double>& times, const std::vector<std::vector<double>>& runs) {
    Trajectory tr;
    tr.aggregated = true;
    tr.times = times;
    tr.runs = runs;
    const std::size_t T = times.size();
    tr.mean.assign(T, std::numeric_limits<double>::quiet_NaN());
    tr.q10 = tr.mean;
    tr.q90 = tr.mean;
    tr.stderr_ = tr.mean;
    std::vector<double> col;
    for (std::size_t i = 0; i < T; ++i) {
        col.clear();
        for (const auto& r : runs)
            if (i < r.size() && std::isfinite(r[i])) col.push_back(r[i]);
        if (col.empty()) continue;
        double s = 0.0;
        for (double v : col) s += v;
        const double mu = s / col.size();
        double ss = 0.0;
        for (double v : col) ss += (v - mu) * (v - mu);
        tr.mean[i] = mu;
        tr.stderr_[i] = col.size() > 1 ? std::sqrt(ss / (col.size() - 1) / col.size()) : 0.0;
        std::sort(col.begin(), col.end());
        auto q = [&](double p) {
            const double h = p * (col.size() - 1);
            const std::size_t lo = static_cast<std::size_t>(std::floor(h));
            const std::size_t hi = std::min(lo + 1, col.size() - 1);
            return col[lo] + (h - lo) * (col[hi] - col[lo]);
        };
        tr.q10[i] = q(0.1);
        tr.q90[i] = q(0.9);
    }
    return tr;
}

template <class Fn>
static void parallel_for(int count, int threads, Fn fn) {
    int nt = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    nt = std::min(nt, count);
    if (nt <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex m;
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t)
        pool.emplace_back([&] {
            for (int i; (i = next.fetch_add(1)) < count;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(m);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

Trajectory run_ensemble(const EnsembleSpec& spec, const AlgoParams& a, double epochs, int n_seeds,
                        const RunOptions& opt) {
    if (n_seeds < 1) throw std::invalid_argument("run_ensemble: need at least one seed");
    std::vector<Trajectory> out(n_seeds);
    LsqProblem fixed;
    const LsqProblem* shared = spec.data;
    if (!shared && spec.fixed_problem) {
        fixed = generate_gaussian(spec.n, spec.d, spec.R, spec.R_tilde, spec.seed);
        shared = &fixed;
    }
    parallel_for(n_seeds, spec.threads, [&](int s) {
        const std::uint64_t run_seed = derive_seed(spec.seed, 2 * static_cast<std::uint64_t>(s) + 1);
        if (shared) {
            out[s] = run(*shared, a, epochs, run_seed, opt);
        } else {
            const LsqProblem p = generate_gaussian(spec.n, spec.d, spec.R, spec.R_tilde,
                                                   derive_seed(spec.seed, 2 * static_cast<std::uint64_t>(s)));
            out[s] = run(p, a, epochs, run_seed, opt);
        }
    });
    std::vector<std::vector<double>> runs;
    double f0 = 0.0;
    for (const auto& t : out) {
        runs.push_back(t.values);
        f0 += t.initial_value;
    }
    Trajectory agg = aggregate(out.front().times, runs);
    agg.initial_value = f0 / n_seeds;
    for (const auto& t : out) {
        if (t.diverged) {
            ++agg.diverged_runs;
            if (agg.diverged_at < 0.0 || t.diverged_at < agg.diverged_at) agg.diverged_at = t.diverged_at;
        }
    }
    agg.diverged = agg.diverged_runs == n_seeds;
    return agg;
}

// ---------------------------------------------------------------------------

Trajectory simulate_homogenized(const SpectralProblem& sp, const KernelSpec& k, double T, std::uint64_t seed,
                                const HomogenizedOptions& opt) {
    if (!(opt.dt > 0.0) || opt.dt > 0.01 + 1e-15) throw std::invalid_argument("simulate_homogenized: need 0 < dt <= 0.01");
    if (!(T > 0.0)) throw std::invalid_argument("simulate_homogenized: T must be positive");
    const int n = sp.n();
    std::vector<int> active;
    double frozen = 0.0;  // loss carried by sigma = 0 coordinates
    for (int j = 0; j < n; ++j) {
        if (sp.sigma(j) > 0.0) active.push_back(j);
        else frozen += 0.5 * sp.noise_coords(j) * sp.noise_coords(j);
    }
    const std::size_t m = active.size();
    std::vector<double> sig(m), e(m), w(m, 0.0);
    for (std::size_t q = 0; q < m; ++q) {
        const int j = active[q];
        sig[q] = sp.sigma(j);
        e[q] = sp.sigma(j) * sp.init_coords(j) - sp.noise_coords(j);
    }
    auto current_loss = [&] {
        double s = frozen;
        for (double v : e) s += 0.5 * v * v;
        return s;
    };

    auto eng = make_engine(seed, Stream::Brownian);
    std::normal_distribution<double> z(0.0, 1.0);
    const long long steps = std::llround(T / opt.dt);
    const long long every = std::max<long long>(1, std::llround(opt.record_every / opt.dt));
    const double sdt = std::sqrt(opt.dt);

    Trajectory tr;
    tr.initial_value = current_loss();
    tr.times.push_back(0.0);
    tr.values.push_back(tr.initial_value);
    double t = 0.0;
    for (long long s = 1; s <= steps; ++s) {
        const double f = current_loss();
        const double amp = std::sqrt(2.0 * std::max(f, 0.0) / n);
        const double Phi = k.Phi(t);
        for (std::size_t q = 0; q < m; ++q) {
            const double dxi = sig[q] * amp * sdt * z(eng) + sig[q] * e[q] * opt.dt;
            const double dnu = -k.gamma2 * dxi - k.gamma1 * w[q] * opt.dt;
            w[q] += -Phi * w[q] * opt.dt + dxi;
            e[q] += sig[q] * dnu;
        }
        t = s * opt.dt;
        if (s % every == 0) {
            const double fl = current_loss();
            tr.times.push_back(t);
            if (!std::isfinite(fl) || fl > 1e12) {
                tr.diverged = true;
                tr.diverged_at = t;
                tr.values.push_back(std::numeric_limits<double>::quiet_NaN());
                break;
            }
            tr.values.push_back(fl);
        }
    }
    return tr;
}

Trajectory simulate_homogenized_ensemble(const SpectralProblem& sp, const KernelSpec& k, double T, int paths,
                                         std::uint64_t seed, const HomogenizedOptions& opt, int threads) {
    if (paths < 1) throw std::invalid_argument("simulate_homogenized_ensemble: need at least one path");
    std::vector<Trajectory> out(paths);
    parallel_for(paths, threads, [&](int s) {
        out[s] = simulate_homogenized(sp, k, T, derive_seed(seed, static_cast<std::uint64_t>(s)), opt);
    });
    std::vector<std::vector<double>> runs;
    const Trajectory* longest = &out.front();
    for (const auto& t : out) {
        runs.push_back(t.values);
        if (t.times.size() > longest->times.size()) longest = &t;
    }
    Trajectory agg = aggregate(longest->times, runs);
    agg.initial_value = out.front().initial_value;
    for (const auto& t : out) agg.diverged_runs += t.diverged ? 1 : 0;
    agg.diverged = agg.diverged_runs == paths;
    return agg;
}

}  // namespace momdyn
