#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace qpinn::fractional {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// L1 weights nu_k so that sum nu_k u(x_k) approximates the Caputo derivative
// of order alpha at the last grid point, anchored at grid[0].
std::vector<double> l1_weights(std::span<const double> grid, double alpha);

struct CaputoMatrix {
    double alpha = 0.5;
    std::vector<double> grid;
    Mat M;  // lower triangular, row 0 zero
};

CaputoMatrix caputo_matrix(std::span<const double> grid, double alpha);
Eigen::VectorXd apply_caputo(const CaputoMatrix& m, const Eigen::VectorXd& u_on_grid);

// Order p = v + alpha with integer v >= 1: the alpha-matrix applied to the
// v-th derivative values supplied by the caller.
Eigen::VectorXd caputo_higher(double p, std::span<const double> grid, const Eigen::VectorXd& dv_u_on_grid);

}  // namespace qpinn::fractional
