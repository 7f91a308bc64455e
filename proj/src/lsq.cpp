#include "momdyn/lsq.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/SVD>

#include "momdyn/errors.hpp"
#include "momdyn/rng.hpp"

namespace momdyn {

double SpectralProblem::loss(const Eigen::VectorXd& nu) const {
    return 0.5 * (sigma.cwiseProduct(nu) - noise_coords).squaredNorm();
}

LsqProblem generate_gaussian(int n, int d, double R, double R_tilde, std::uint64_t seed) {
    if (n < 1 || d < 1) throw std::invalid_argument("generate_gaussian: n and d must be positive");
    if (R < 0.0 || R_tilde < 0.0) throw std::invalid_argument("generate_gaussian: R and R_tilde must be >= 0");
    LsqProblem p;
    p.n = n;
    p.d = d;
    p.R = R;
    p.R_tilde = R_tilde;
    p.seed = seed;

    std::normal_distribution<double> z(0.0, 1.0);
    auto gm = make_engine(seed, Stream::Matrix);
    const double sa = 1.0 / std::sqrt(static_cast<double>(d));
    p.A.resize(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) p.A(i, j) = sa * z(gm);

    auto gs = make_engine(seed, Stream::Signal);
    const double ss = std::sqrt(R / n);
    p.x_tilde.resize(d);
    for (int j = 0; j < d; ++j) p.x_tilde(j) = ss * z(gs);
    p.x0 = Eigen::VectorXd::Zero(d);

    auto ge = make_engine(seed, Stream::Noise);
    const double se = std::sqrt(R_tilde / n);
    p.eta.resize(n);
    for (int i = 0; i < n; ++i) p.eta(i) = se * z(ge);

    p.b = p.A * p.x_tilde + p.eta;
    return p;
}

double loss(const LsqProblem& p, const Eigen::VectorXd& x) {
    if (x.size() != p.d) throw std::invalid_argument("loss: dimension mismatch");
    return 0.5 * (p.A * x - p.b).squaredNorm();
}

Eigen::VectorXd full_grad(const LsqProblem& p, const Eigen::VectorXd& x) {
    if (x.size() != p.d) throw std::invalid_argument("full_grad: dimension mismatch");
    return p.A.transpose() * (p.A * x - p.b);
}

Eigen::VectorXd stochastic_grad(const LsqProblem& p, const Eigen::VectorXd& x, int i) {
    if (i < 0 || i >= p.n) throw std::out_of_range("stochastic_grad: row index out of range");
    if (x.size() != p.d) throw std::invalid_argument("stochastic_grad: dimension mismatch");
    const double res = p.A.row(i).dot(x) - p.b(i);
    return (static_cast<double>(p.n) * res) * p.A.row(i).transpose();
}

static std::shared_ptr<const SpectralProblem> compute_spectral(const LsqProblem& p) {
    const Eigen::MatrixXd A = p.A;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("to_spectral: SVD did not converge");
    const int k = std::min(p.n, p.d);
    auto sp = std::make_shared<SpectralProblem>();
    sp->sigma = Eigen::VectorXd::Zero(p.n);
    sp->sigma.head(k) = svd.singularValues().head(k);
    sp->noise_coords = svd.matrixU().transpose() * p.eta;
    sp->init_coords = Eigen::VectorXd::Zero(p.n);
    sp->init_coords.head(k) = (svd.matrixV().transpose() * (p.x0 - p.x_tilde)).head(k);
    if (!sp->sigma.allFinite() || !sp->noise_coords.allFinite() || !sp->init_coords.allFinite())
        throw NumericalError("to_spectral: non-finite singular data");
    return sp;
}

const SpectralProblem& to_spectral(const LsqProblem& p) {
    std::call_once(p.cache->once, [&] { p.cache->spectral = compute_spectral(p); });
    return *p.cache->spectral;
}

std::vector<double> hessian_eigenvalues(const LsqProblem& p) {
    const auto& sp = to_spectral(p);
    std::vector<double> e(sp.sigma.size());
    for (int j = 0; j < sp.sigma.size(); ++j) e[j] = sp.sigma(j) * sp.sigma(j);
    return e;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool parse_double(std::string s, double& out) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
    if (b == s.size()) return false;
    if (s[b] == '+') ++b;
    auto [ptr, ec] = std::from_chars(s.data() + b, s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

LsqProblem load_csv(const std::string& path, const CsvOptions& opt) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_csv: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::vector<std::string> header;
    std::string line;
    std::size_t width = 0, lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        std::vector<double> vals(cells.size());
        bool numeric = true;
        for (std::size_t c = 0; c < cells.size(); ++c) numeric = numeric && parse_double(cells[c], vals[c]);
        if (!numeric) {
            if (rows.empty() && header.empty()) {
                header = cells;
                width = cells.size();
                continue;
            }
            throw std::invalid_argument("load_csv: non-numeric cell on line " + std::to_string(lineno));
        }
        if (width == 0) width = vals.size();
        if (vals.size() != width) throw std::invalid_argument("load_csv: ragged row on line " + std::to_string(lineno));
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw std::invalid_argument("load_csv: no data rows in " + path);
    if (width < 2) throw std::invalid_argument("load_csv: need at least one feature and a target column");

    int tc = opt.target_col < 0 ? static_cast<int>(width) - 1 : opt.target_col;
    if (!opt.target_name.empty()) {
        tc = -1;
        for (std::size_t c = 0; c < header.size(); ++c)
            if (header[c] == opt.target_name) tc = static_cast<int>(c);
        if (tc < 0) throw std::invalid_argument("load_csv: no column named " + opt.target_name);
    }
    if (tc >= static_cast<int>(width)) throw std::invalid_argument("load_csv: target column out of range");

    LsqProblem p;
    p.n = static_cast<int>(rows.size());
    p.d = static_cast<int>(width) - 1;
    p.A.resize(p.n, p.d);
    p.b.resize(p.n);
    for (int i = 0; i < p.n; ++i) {
        int j = 0;
        for (int c = 0; c < static_cast<int>(width); ++c) {
            if (c == tc) p.b(i) = rows[i][c];
            else p.A(i, j++) = rows[i][c];
        }
    }
    if (opt.center) p.A.rowwise() -= p.A.colwise().mean();
    if (opt.normalize) {
        for (int i = 0; i < p.n; ++i) {
            const double nr = p.A.row(i).norm();
            if (nr > 0.0) p.A.row(i) /= nr;
        }
    }
    const Eigen::MatrixXd A = p.A;
    p.x_tilde = A.completeOrthogonalDecomposition().solve(p.b);
    p.eta = p.b - A * p.x_tilde;
    p.x0 = Eigen::VectorXd::Zero(p.d);
    p.R = std::numeric_limits<double>::quiet_NaN();
    p.R_tilde = std::numeric_limits<double>::quiet_NaN();
    return p;
}

}  // namespace momdyn
