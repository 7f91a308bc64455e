// Random least-squares problems f(x) = 1/2 ||A x - b||^2, b = A x_tilde + eta.
#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>

#include <Eigen/Dense>

namespace momdyn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Problem in the singular basis A = U diag(sigma) V^T. All vectors have length
// n; sigma is padded with zeros past min(n, d) and so is init_coords.
struct SpectralProblem {
    Eigen::VectorXd sigma;
    Eigen::VectorXd noise_coords;  // U^T eta
    Eigen::VectorXd init_coords;   // V^T (x0 - x_tilde)

    int n() const { return static_cast<int>(sigma.size()); }
    // 1/2 sum_j (sigma_j nu_j - (U^T eta)_j)^2
    double loss(const Eigen::VectorXd& nu) const;
};

struct LsqProblem {
    RowMatrix A;
    Eigen::VectorXd b, x_tilde, eta, x0;
    int n = 0, d = 0;
    double R = 0.0, R_tilde = 0.0;  // NaN when unknown (ingested data)
    std::uint64_t seed = 0;

    // Filled on first call to to_spectral and shared by copies.
    struct Cache {
        std::once_flag once;
        std::shared_ptr<const SpectralProblem> spectral;
    };
    std::shared_ptr<Cache> cache = std::make_shared<Cache>();
};

// A_ij ~ N(0, 1/d), x0 = 0, x_tilde ~ N(0, R/n I_d), eta ~ N(0, R_tilde/n I_n).
LsqProblem generate_gaussian(int n, int d, double R, double R_tilde, std::uint64_t seed);

double loss(const LsqProblem& p, const Eigen::VectorXd& x);
Eigen::VectorXd full_grad(const LsqProblem& p, const Eigen::VectorXd& x);
// n (a_i x - b_i) a_i^T, so that the average over i equals the full gradient.
Eigen::VectorXd stochastic_grad(const LsqProblem& p, const Eigen::VectorXd& x, int i);

const SpectralProblem& to_spectral(const LsqProblem& p);

// Eigenvalues of H = A A^T (length n, from the cached SVD).
std::vector<double> hessian_eigenvalues(const LsqProblem& p);

struct CsvOptions {
    bool normalize = true;   // scale each row of A to unit norm
    bool center = false;     // subtract column means before normalizing
    int target_col = -1;     // -1: last column
    std::string target_name; // overrides target_col when a header is present
};

// Rows become a_i, the target column becomes b. x_tilde is the least-squares
// solution, eta the residual, x0 = 0; R and R_tilde are NaN.
LsqProblem load_csv(const std::string& path, const CsvOptions& opt = {});

}  // namespace momdyn
