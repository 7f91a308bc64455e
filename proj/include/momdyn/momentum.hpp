// Generic stochastic momentum (y_k = (1 - Delta(k)) y_{k-1} + Gamma1 g_k,
// x_{k+1} = x_k - Gamma2 g_k - y_k), its named instances, ensembles, and the
// homogenized diffusion in spectral coordinates.
#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "momdyn/kernels.hpp"
#include "momdyn/lsq.hpp"
#include "momdyn/spectrum.hpp"

namespace momdyn {

struct MomentumSchedule {
    enum class Kind { None, Constant, DimConstant, DimPower };
    Kind kind = Kind::None;
    double theta = 0.0;
    // Delta(k) for iteration k >= 1 on a problem with n rows.
    double delta(long long k, int n) const;
};

struct AlgoParams {
    Algo name = Algo::SGD;
    // Named-algorithm parameters (unused ones stay 0).
    double gamma = 0.0;   // sgd, shb, sdahb
    double gamma1 = 0.0;  // sdana
    double gamma2 = 0.0;  // sdana; sdahb extension with a gradient step
    double theta = 0.0;   // shb, sdahb, sdana
    // custom only: raw Gamma1, Gamma2 and a constant Delta
    double raw_gamma1 = 0.0, raw_gamma2 = 0.0, raw_delta = 0.0;
    KernelMode mode = KernelMode::ClosedForm;

    double gamma1_raw(int n) const;
    double gamma2_raw(int n) const;
    MomentumSchedule schedule() const;
    // Continuous-time description for an n-row problem.
    KernelSpec continuous(int n) const;
    nlohmann::json to_json() const;
};

AlgoParams sgd(double gamma);
AlgoParams shb(double gamma, double theta);
AlgoParams sdahb(double gamma, double theta, double gamma2 = 0.0);
AlgoParams sdana(double gamma1, double gamma2, double theta);
AlgoParams custom(double gamma1_raw, double gamma2_raw, double delta);

// Default parameters in terms of the normalized trace m. SHB needs n because
// its defaults are the SDAHB defaults divided by n.
AlgoParams defaults(Algo a, double m, int n = 0);
AlgoParams defaults(Algo a, const SpectralMeasure& mu, int n = 0);

struct Trajectory {
    std::vector<double> times;
    // Single run: values. Aggregate: mean/q10/q90 plus the per-run matrix.
    std::vector<double> values;
    std::vector<double> mean, q10, q90, stderr_;
    std::vector<std::vector<double>> runs;
    double initial_value = 0.0;
    bool aggregated = false;
    bool diverged = false;       // single run diverged, or every run did
    int diverged_runs = 0;
    double diverged_at = -1.0;   // first sample time flagged as divergent
};

struct RunOptions {
    int samples_per_epoch = 20;
    double divergence_threshold = 1e12;
};

Trajectory run(const LsqProblem& p, const AlgoParams& a, double epochs, std::uint64_t seed,
               const RunOptions& opt = {});

// x after a given number of iterations (for tests and bitwise comparisons).
std::vector<Eigen::VectorXd> iterates(const LsqProblem& p, const AlgoParams& a, long long steps,
                                      std::uint64_t seed);

struct EnsembleSpec {
    int n = 0, d = 0;
    double R = 1.0, R_tilde = 0.0;
    std::uint64_t seed = 0;
    bool fixed_problem = false;            // one problem, different index streams
    const LsqProblem* data = nullptr;      // use this problem for every member
    int threads = 0;                       // 0: hardware concurrency
};

// Ensemble member s draws its problem from derive_seed(seed, 2s) and its
// sample indices from derive_seed(seed, 2s + 1).
Trajectory run_ensemble(const EnsembleSpec& spec, const AlgoParams& a, double epochs, int n_seeds,
                        const RunOptions& opt = {});

// Mean, 10/90% quantiles and standard error across runs (NaN entries skipped).
Trajectory aggregate(const std::vector<double>& times, const std::vector<std::vector<double>>& runs);

struct HomogenizedOptions {
    double dt = 0.01;
    double record_every = 0.05;
};

Trajectory simulate_homogenized(const SpectralProblem& sp, const KernelSpec& k, double T, std::uint64_t seed,
                                const HomogenizedOptions& opt = {});

Trajectory simulate_homogenized_ensemble(const SpectralProblem& sp, const KernelSpec& k, double T, int paths,
                                         std::uint64_t seed, const HomogenizedOptions& opt = {}, int threads = 0);

}  // namespace momdyn
