#include "qpinn/integral_ops.hpp"

#include <cmath>
#include <sstream>

namespace qpinn::ops {

namespace {

double checked(double v, const char* what, Eigen::Index i, Eigen::Index j) {
    if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << what << ": kernel is not finite at entry (" << i << ", " << j << ")";
        throw OperatorError(msg.str());
    }
    return v;
}

Vec to_vec(std::span<const double> s) {
    return Eigen::Map<const Vec>(s.data(), static_cast<Eigen::Index>(s.size()));
}

Vec to_vec(const std::vector<double>& s) { return to_vec(std::span<const double>(s)); }

void require_size(Eigen::Index got, Eigen::Index want, const char* what) {
    if (got != want) {
        std::ostringstream msg;
        msg << what << ": size mismatch, expected " << want << " got " << got;
        throw std::invalid_argument(msg.str());
    }
}

// Inner nodes for a variable bound: row i maps the reference nodes to [g(x_i), h(x_i)].
void variable_nodes(const Bound& g, const Bound& h, const Vec& x, const Vec& ref, Mat& R, Vec& scale,
                    const char* what) {
    R.resize(x.size(), ref.size());
    scale.resize(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double lo = g(x[i]);
        const double hi = h(x[i]);
        if (!(hi >= lo)) {
            std::ostringstream msg;
            msg << what << ": upper bound below lower bound at x=" << x[i];
            throw OperatorError(msg.str());
        }
        scale[i] = 0.5 * (hi - lo);
        for (Eigen::Index j = 0; j < ref.size(); ++j) R(i, j) = scale[i] * ref[j] + 0.5 * (hi + lo);
    }
}

Vec kron(const Vec& a, const Vec& b) {
    Vec out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
        for (Eigen::Index j = 0; j < b.size(); ++j) out[i * b.size() + j] = a[i] * b[j];
    return out;
}

}  // namespace

FredholmAssembly assemble_fredholm(const Kernel1& kernel, std::span<const double> x,
                                   const quadrature::MappedRule& rule, bool kernel_includes_weight) {
    FredholmAssembly a;
    a.x = to_vec(x);
    a.r = to_vec(rule.mapped_nodes);
    a.w = to_vec(rule.base.weights);
    a.scale = rule.scale;
    a.K.resize(a.x.size(), a.r.size());
    for (Eigen::Index i = 0; i < a.x.size(); ++i)
        for (Eigen::Index j = 0; j < a.r.size(); ++j) {
            double k = kernel(a.x[i], a.r[j]);
            if (kernel_includes_weight) k /= rule.base.family.weight(rule.base.nodes[j]);
            a.K(i, j) = checked(k, "assemble_fredholm", i, j);
        }
    a.C = a.scale * a.K * a.w.asDiagonal();
    return a;
}

FredholmAssembly assemble_fredholm(const Kernel1& kernel, std::span<const double> x,
                                   const quadrature::QuadratureRule& rule, bool kernel_includes_weight) {
    FredholmAssembly a;
    a.x = to_vec(x);
    a.r = to_vec(rule.nodes);
    a.w = to_vec(rule.weights);
    a.scale = 1.0;
    a.K.resize(a.x.size(), a.r.size());
    for (Eigen::Index i = 0; i < a.x.size(); ++i)
        for (Eigen::Index j = 0; j < a.r.size(); ++j) {
            double k = kernel(a.x[i], a.r[j]);
            if (kernel_includes_weight) k /= rule.family.weight(rule.nodes[j]);
            a.K(i, j) = checked(k, "assemble_fredholm", i, j);
        }
    a.C = a.K * a.w.asDiagonal();
    return a;
}

Vec apply_fredholm(const FredholmAssembly& a, const Vec& u_at_r) {
    require_size(u_at_r.size(), a.r.size(), "apply_fredholm");
    return a.C * u_at_r;
}

VolterraAssembly assemble_volterra(const Kernel1& kernel, const Bound& g, const Bound& h,
                                   std::span<const double> x, const quadrature::QuadratureRule& inner,
                                   bool kernel_includes_weight) {
    if (!inner.family.finite_domain())
        throw std::invalid_argument("assemble_volterra: inner rule must live on [-1, 1]");
    VolterraAssembly a;
    a.x = to_vec(x);
    a.w = to_vec(inner.weights);
    const Vec ref = to_vec(inner.nodes);
    variable_nodes(g, h, a.x, ref, a.R, a.scale, "assemble_volterra");
    a.K.resize(a.R.rows(), a.R.cols());
    for (Eigen::Index i = 0; i < a.R.rows(); ++i)
        for (Eigen::Index j = 0; j < a.R.cols(); ++j) {
            double k = kernel(a.x[i], a.R(i, j));
            if (kernel_includes_weight) k /= inner.family.weight(ref[j]);
            a.K(i, j) = checked(k, "assemble_volterra", i, j);
        }
    a.C = a.scale.asDiagonal() * a.K * a.w.asDiagonal();
    return a;
}

VolterraAssembly assemble_volterra(const Kernel1& kernel, const quadrature::MappedRule& rule) {
    const double lo = rule.a;
    return assemble_volterra(kernel, [lo](double) { return lo; }, [](double x) { return x; },
                             rule.mapped_nodes, rule.base);
}

Vec apply_volterra(const VolterraAssembly& a, const Mat& u_on_R) {
    require_size(u_on_R.rows(), a.C.rows(), "apply_volterra rows");
    require_size(u_on_R.cols(), a.C.cols(), "apply_volterra cols");
    return a.C.cwiseProduct(u_on_R).rowwise().sum();
}

int TensorAssembly::eval_count() const {
    int n = 1;
    for (int e : eval_extent) n *= e;
    return n;
}

int TensorAssembly::node_count() const {
    int n = 1;
    for (int e : node_extent) n *= e;
    return n;
}

Mat TensorAssembly::inner_points() const {
    if (!volterra) {
        Mat pts(node_count(), dim);
        int row = 0;
        if (dim == 2) {
            for (int k = 0; k < node_extent[0]; ++k)
                for (int l = 0; l < node_extent[1]; ++l, ++row) {
                    pts(row, 0) = inner[0](0, k);
                    pts(row, 1) = inner[1](0, l);
                }
        } else {
            for (int k = 0; k < node_extent[0]; ++k)
                for (int l = 0; l < node_extent[1]; ++l)
                    for (int m = 0; m < node_extent[2]; ++m, ++row) {
                        pts(row, 0) = inner[0](0, k);
                        pts(row, 1) = inner[1](0, l);
                        pts(row, 2) = inner[2](0, m);
                    }
        }
        return pts;
    }
    // 2-D Volterra: rows ordered (i, j, k, l)
    Mat pts(static_cast<Eigen::Index>(eval_count()) * node_count(), 2);
    Eigen::Index row = 0;
    for (int i = 0; i < eval_extent[0]; ++i)
        for (int j = 0; j < eval_extent[1]; ++j)
            for (int k = 0; k < node_extent[0]; ++k)
                for (int l = 0; l < node_extent[1]; ++l, ++row) {
                    pts(row, 0) = inner[0](i, k);
                    pts(row, 1) = inner[1](j, l);
                }
    return pts;
}

TensorAssembly assemble_fredholm_2d(const Kernel2& kernel, std::span<const double> x, std::span<const double> y,
                                    const quadrature::MappedRule& rs, const quadrature::MappedRule& rt) {
    TensorAssembly a;
    a.dim = 2;
    const Vec xs = to_vec(x), ys = to_vec(y);
    const Vec s = to_vec(rs.mapped_nodes), t = to_vec(rt.mapped_nodes);
    a.eval_extent = {static_cast<int>(xs.size()), static_cast<int>(ys.size())};
    a.node_extent = {static_cast<int>(s.size()), static_cast<int>(t.size())};
    a.weights = {to_vec(rs.base.weights), to_vec(rt.base.weights)};
    a.scales = {Vec::Constant(1, rs.scale), Vec::Constant(1, rt.scale)};
    a.inner = {s.transpose(), t.transpose()};
    a.K.resize(a.eval_count(), a.node_count());
    for (Eigen::Index i = 0; i < xs.size(); ++i)
        for (Eigen::Index j = 0; j < ys.size(); ++j) {
            const Eigen::Index row = i * ys.size() + j;
            for (Eigen::Index k = 0; k < s.size(); ++k)
                for (Eigen::Index l = 0; l < t.size(); ++l)
                    a.K(row, k * t.size() + l) =
                        checked(kernel(xs[i], ys[j], s[k], t[l]), "assemble_fredholm_2d", row, k * t.size() + l);
        }
    const Vec w = kron(a.weights[0], a.weights[1]) * (rs.scale * rt.scale);
    a.C = a.K * w.asDiagonal();
    return a;
}

Mat apply_fredholm_2d(const TensorAssembly& a, const Mat& u_grid) {
    require_size(u_grid.rows(), a.node_extent[0], "apply_fredholm_2d rows");
    require_size(u_grid.cols(), a.node_extent[1], "apply_fredholm_2d cols");
    const Vec flat = Eigen::Map<const Vec>(u_grid.data(), u_grid.size());
    const Vec out = a.C * flat;
    return Eigen::Map<const Mat>(out.data(), a.eval_extent[0], a.eval_extent[1]);
}

TensorAssembly assemble_volterra_2d(const Kernel2& kernel, std::span<const double> x, std::span<const double> y,
                                    const Bound& g1, const Bound& h1, const Bound& g2, const Bound& h2,
                                    const quadrature::QuadratureRule& rs, const quadrature::QuadratureRule& rt) {
    if (!rs.family.finite_domain() || !rt.family.finite_domain())
        throw std::invalid_argument("assemble_volterra_2d: inner rules must live on [-1, 1]");
    TensorAssembly a;
    a.dim = 2;
    a.volterra = true;
    const Vec xs = to_vec(x), ys = to_vec(y);
    a.eval_extent = {static_cast<int>(xs.size()), static_cast<int>(ys.size())};
    a.node_extent = {rs.n, rt.n};
    a.weights = {to_vec(rs.weights), to_vec(rt.weights)};
    Mat Rx, Ry;
    Vec sx, sy;
    variable_nodes(g1, h1, xs, to_vec(rs.nodes), Rx, sx, "assemble_volterra_2d");
    variable_nodes(g2, h2, ys, to_vec(rt.nodes), Ry, sy, "assemble_volterra_2d");
    a.scales = {sx, sy};
    a.inner = {Rx, Ry};
    const Eigen::Index M = static_cast<Eigen::Index>(rs.n) * rt.n;
    a.K.resize(a.eval_count(), M);
    a.C.resize(a.eval_count(), M);
    const Vec w = kron(a.weights[0], a.weights[1]);
    for (Eigen::Index i = 0; i < xs.size(); ++i)
        for (Eigen::Index j = 0; j < ys.size(); ++j) {
            const Eigen::Index row = i * ys.size() + j;
            for (int k = 0; k < rs.n; ++k)
                for (int l = 0; l < rt.n; ++l) {
                    const Eigen::Index col = static_cast<Eigen::Index>(k) * rt.n + l;
                    const double kv =
                        checked(kernel(xs[i], ys[j], Rx(i, k), Ry(j, l)), "assemble_volterra_2d", row, col);
                    a.K(row, col) = kv;
                    a.C(row, col) = sx[i] * sy[j] * w[col] * kv;
                }
        }
    return a;
}

Mat apply_volterra_2d(const TensorAssembly& a, const Mat& u_on_inner) {
    require_size(u_on_inner.rows(), a.C.rows(), "apply_volterra_2d rows");
    require_size(u_on_inner.cols(), a.C.cols(), "apply_volterra_2d cols");
    const Vec out = a.C.cwiseProduct(u_on_inner).rowwise().sum();
    return Eigen::Map<const Mat>(out.data(), a.eval_extent[0], a.eval_extent[1]);
}

TensorAssembly assemble_fredholm_3d(const Kernel3& kernel, std::span<const double> x, std::span<const double> y,
                                    std::span<const double> z, const quadrature::MappedRule& rr,
                                    const quadrature::MappedRule& rs, const quadrature::MappedRule& rt) {
    TensorAssembly a;
    a.dim = 3;
    const Vec xs = to_vec(x), ys = to_vec(y), zs = to_vec(z);
    const Vec r = to_vec(rr.mapped_nodes), s = to_vec(rs.mapped_nodes), t = to_vec(rt.mapped_nodes);
    a.eval_extent = {static_cast<int>(xs.size()), static_cast<int>(ys.size()), static_cast<int>(zs.size())};
    a.node_extent = {static_cast<int>(r.size()), static_cast<int>(s.size()), static_cast<int>(t.size())};
    a.weights = {to_vec(rr.base.weights), to_vec(rs.base.weights), to_vec(rt.base.weights)};
    a.scales = {Vec::Constant(1, rr.scale), Vec::Constant(1, rs.scale), Vec::Constant(1, rt.scale)};
    a.inner = {r.transpose(), s.transpose(), t.transpose()};
    a.K.resize(a.eval_count(), a.node_count());
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < xs.size(); ++i)
        for (Eigen::Index j = 0; j < ys.size(); ++j)
            for (Eigen::Index m = 0; m < zs.size(); ++m, ++row) {
                Eigen::Index col = 0;
                for (Eigen::Index p = 0; p < r.size(); ++p)
                    for (Eigen::Index q = 0; q < s.size(); ++q)
                        for (Eigen::Index l = 0; l < t.size(); ++l, ++col)
                            a.K(row, col) = checked(kernel(xs[i], ys[j], zs[m], r[p], s[q], t[l]),
                                                    "assemble_fredholm_3d", row, col);
            }
    const Vec w = kron(kron(a.weights[0], a.weights[1]), a.weights[2]) * (rr.scale * rs.scale * rt.scale);
    a.C = a.K * w.asDiagonal();
    return a;
}

Vec apply_fredholm_3d(const TensorAssembly& a, const Vec& u_nodes) {
    require_size(u_nodes.size(), a.node_count(), "apply_fredholm_3d");
    return a.C * u_nodes;
}

}  // namespace qpinn::ops
