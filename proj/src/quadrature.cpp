#include "scattomo/quadrature.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "scattomo/common.hpp"

namespace scattomo {

namespace {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix of the
// orthogonal-polynomial recurrence, weights are mu0 * v0^2.
QuadratureRule golub_welsch(int n, const std::vector<double>& offdiag, double mu0) {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) {
        jacobi(i, i + 1) = offdiag[static_cast<std::size_t>(i)];
        jacobi(i + 1, i) = offdiag[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("quadrature: Jacobi eigensolve failed");
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rule.nodes[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
        const double v0 = solver.eigenvectors()(0, i);
        rule.weights[static_cast<std::size_t>(i)] = mu0 * v0 * v0;
    }
    return rule;
}

QuadratureRule make_hermite(int n) {
    // Recurrence for Hermite polynomials orthogonal wrt exp(-x^2):
    // beta_k = sqrt(k/2).
    std::vector<double> beta(static_cast<std::size_t>(n - 1));
    for (int k = 1; k < n; ++k)
        beta[static_cast<std::size_t>(k - 1)] = std::sqrt(0.5 * k);
    return golub_welsch(n, beta, std::sqrt(pi));
}

QuadratureRule make_legendre(int n) {
    // beta_k = k / sqrt(4k^2 - 1), mu0 = 2.
    std::vector<double> beta(static_cast<std::size_t>(n - 1));
    for (int k = 1; k < n; ++k)
        beta[static_cast<std::size_t>(k - 1)] = k / std::sqrt(4.0 * k * k - 1.0);
    return golub_welsch(n, beta, 2.0);
}

const QuadratureRule& cached(int n, std::map<int, QuadratureRule>& cache, std::mutex& mtx,
                             QuadratureRule (*make)(int)) {
    if (n < 1) throw std::invalid_argument("quadrature: order must be >= 1");
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make(n)).first;
    return it->second;
}

}  // namespace

const QuadratureRule& gauss_hermite(int n) {
    static std::map<int, QuadratureRule> cache;
    static std::mutex mtx;
    return cached(n, cache, mtx, make_hermite);
}

const QuadratureRule& gauss_legendre(int n) {
    static std::map<int, QuadratureRule> cache;
    static std::mutex mtx;
    return cached(n, cache, mtx, make_legendre);
}

}  // namespace scattomo
