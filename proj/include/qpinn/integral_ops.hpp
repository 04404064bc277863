#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "qpinn/quadrature.hpp"

namespace qpinn::ops {

using Kernel1 = std::function<double(double x, double t)>;
using Kernel2 = std::function<double(double x, double y, double s, double t)>;
using Kernel3 = std::function<double(double x, double y, double z, double r, double s, double t)>;
using Bound = std::function<double(double)>;

using Vec = Eigen::VectorXd;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class OperatorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FredholmAssembly {
    Mat K;       // K(i,j) = kernel(x_i, r_j)
    Vec w;       // reference weights
    double scale = 1.0;
    Vec x;       // evaluation points
    Vec r;       // quadrature nodes in the integration variable
    Mat C;       // scale * K * diag(w)
};

// When kernel_includes_weight is set the supplied kernel already contains the
// family weight, which is divided out at the reference nodes.
FredholmAssembly assemble_fredholm(const Kernel1& kernel, std::span<const double> x,
                                   const quadrature::MappedRule& rule, bool kernel_includes_weight = false);
FredholmAssembly assemble_fredholm(const Kernel1& kernel, std::span<const double> x,
                                   const quadrature::QuadratureRule& rule, bool kernel_includes_weight = false);
Vec apply_fredholm(const FredholmAssembly& a, const Vec& u_at_r);

struct VolterraAssembly {
    Mat R;       // inner nodes, row i spans [g(x_i), h(x_i)]
    Mat K;       // K(i,j) = kernel(x_i, R(i,j))
    Vec w;
    Vec scale;   // (h(x_i) - g(x_i)) / 2
    Vec x;
    Mat C;       // scale_i * K(i,j) * w_j
};

VolterraAssembly assemble_volterra(const Kernel1& kernel, const Bound& g, const Bound& h,
                                   std::span<const double> x, const quadrature::QuadratureRule& inner,
                                   bool kernel_includes_weight = false);
// x = mapped nodes of the rule on [a,b] and g(x) = a, h(x) = x.
VolterraAssembly assemble_volterra(const Kernel1& kernel, const quadrature::MappedRule& rule);
Vec apply_volterra(const VolterraAssembly& a, const Mat& u_on_R);

// Multi-dimensional operators. Evaluation points form a tensor grid and are
// flattened row-major in (x, y[, z]) order; the same holds for inner nodes.
struct TensorAssembly {
    int dim = 2;
    std::vector<int> eval_extent;   // N per axis
    std::vector<int> node_extent;   // M per axis
    std::vector<Vec> weights;       // per-axis reference weights
    std::vector<Vec> scales;        // per-axis, length 1 (Fredholm) or N_axis (Volterra)
    std::vector<Mat> inner;         // per-axis inner nodes, N_axis x M_axis (rows equal for Fredholm)
    Mat K;                          // prod(N) x prod(M), a flattened rank-2d tensor
    Mat C;                          // K scaled by weights and scales
    bool volterra = false;

    int eval_count() const;
    int node_count() const;
    // Inner point coordinates, one row per (eval point, node) pair for Volterra
    // or per node for Fredholm; columns are the axes.
    Mat inner_points() const;
};

TensorAssembly assemble_fredholm_2d(const Kernel2& kernel, std::span<const double> x, std::span<const double> y,
                                    const quadrature::MappedRule& rs, const quadrature::MappedRule& rt);
Mat apply_fredholm_2d(const TensorAssembly& a, const Mat& u_grid);

TensorAssembly assemble_volterra_2d(const Kernel2& kernel, std::span<const double> x, std::span<const double> y,
                                    const Bound& g1, const Bound& h1, const Bound& g2, const Bound& h2,
                                    const quadrature::QuadratureRule& rs, const quadrature::QuadratureRule& rt);
// u_on_inner: prod(N) x prod(M), row (i,j) holds u at the inner nodes of point (x_i, y_j).
Mat apply_volterra_2d(const TensorAssembly& a, const Mat& u_on_inner);

TensorAssembly assemble_fredholm_3d(const Kernel3& kernel, std::span<const double> x, std::span<const double> y,
                                    std::span<const double> z, const quadrature::MappedRule& rr,
                                    const quadrature::MappedRule& rs, const quadrature::MappedRule& rt);
// u_nodes: values on the node grid flattened row-major (r, s, t); returns flattened (x, y, z).
Vec apply_fredholm_3d(const TensorAssembly& a, const Vec& u_nodes);

}  // namespace qpinn::ops
