#include "qpinn/fractional.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qpinn::fractional {

namespace {

void validate(std::span<const double> grid, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("Caputo order alpha must lie in (0, 1), got " + std::to_string(alpha));
    if (grid.empty()) throw std::invalid_argument("Caputo grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::invalid_argument("Caputo grid must be strictly increasing (index " + std::to_string(i) + ")");
}

// Weights for the sub-grid grid[0..=n] written into out[0..=n].
void fill_weights(std::span<const double> grid, std::size_t n, double alpha, double inv_gamma, double* out) {
    const double xn = grid[n];
    const double e = 1.0 - alpha;
    double mu_prev = 0.0;  // mu_{-1}
    for (std::size_t k = 0; k <= n; ++k) {
        double mu = 0.0;   // mu_n = 0
        if (k < n)
            mu = (std::pow(xn - grid[k], e) - std::pow(xn - grid[k + 1], e)) / (grid[k + 1] - grid[k]);
        out[k] = (mu_prev - mu) * inv_gamma;
        mu_prev = mu;
    }
}

}  // namespace

std::vector<double> l1_weights(std::span<const double> grid, double alpha) {
    validate(grid, alpha);
    std::vector<double> nu(grid.size());
    fill_weights(grid, grid.size() - 1, alpha, std::exp(-std::lgamma(2.0 - alpha)), nu.data());
    return nu;
}

CaputoMatrix caputo_matrix(std::span<const double> grid, double alpha) {
    validate(grid, alpha);
    CaputoMatrix m;
    m.alpha = alpha;
    m.grid.assign(grid.begin(), grid.end());
    const auto n = static_cast<Eigen::Index>(grid.size());
    m.M = Mat::Zero(n, n);
    const double inv_gamma = std::exp(-std::lgamma(2.0 - alpha));
    for (Eigen::Index i = 1; i < n; ++i) fill_weights(grid, static_cast<std::size_t>(i), alpha, inv_gamma, &m.M(i, 0));
    return m;
}

Eigen::VectorXd apply_caputo(const CaputoMatrix& m, const Eigen::VectorXd& u) {
    if (u.size() != m.M.cols())
        throw std::invalid_argument("apply_caputo: expected " + std::to_string(m.M.cols()) + " values, got " +
                                    std::to_string(u.size()));
    return m.M * u;
}

Eigen::VectorXd caputo_higher(double p, std::span<const double> grid, const Eigen::VectorXd& dv_u) {
    if (!(p > 1.0)) throw std::invalid_argument("caputo_higher: order must exceed 1");
    const double v = std::floor(p);
    const double alpha = p - v;
    if (alpha == 0.0)
        throw std::invalid_argument("caputo_higher: integer order, use ordinary differentiation");
    return apply_caputo(caputo_matrix(grid, alpha), dv_u);
}

}  // namespace qpinn::fractional
