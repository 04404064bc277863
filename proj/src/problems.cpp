#include "qpinn/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "qpinn/fractional.hpp"

namespace qpinn {

namespace q = quadrature;
using ad::Mat;
using Eigen::Index;
using Eigen::VectorXd;

struct Session::Compiled {
    enum class Layout { matvec, rowwise, slice };
    struct Term {
        int unknown = 0;
        Layout layout = Layout::matvec;
        Mat pts;  // where the unknown is evaluated
        Tensor C;
        Index inner = 0;
        Index slices = 0;
        std::vector<Index> expand;
        Zeta zeta;
        std::function<Tensor(const Tensor&, const Tensor&)> zeta2;
        bool on_derivative = false;
    };

    int d = 1;
    Index N = 0;
    Mat X;
    VectorXd qw;
    std::vector<std::vector<double>> axis;  // collocation nodes per axis
    std::vector<Term> terms;
    std::vector<Tensor> sources;  // per equation
    Mat caputo_grid;              // [a; x] for 1-D fractional terms
    mutable std::map<double, Tensor> caputo_rows;
};

namespace {

struct SortedRule {
    std::vector<double> x;
    std::vector<double> w;  // including the affine scale
};

SortedRule gauss_sorted(int n, double a, double b) {
    const q::MappedRule r = q::gauss_legendre(n, a, b);
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int i, int j) { return r.mapped_nodes[i] < r.mapped_nodes[j]; });
    SortedRule s;
    for (int i : idx) {
        s.x.push_back(r.mapped_nodes[i]);
        s.w.push_back(r.base.weights[i] * r.scale);
    }
    return s;
}

Mat column(const std::vector<double>& v) {
    return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

q::Family inner_family(const OperatorTerm& t, const SessionOptions& o) {
    return o.quad ? *o.quad : t.family;
}

void fail(const std::string& id, const std::string& what) {
    throw std::invalid_argument(id + ": " + what);
}

}  // namespace

Tensor col(const Tensor& X, int axis) { return ad::slice_cols(X, axis, 1); }

VectorXd evaluate_model(const Model& m, const Mat& points, int order, int axis) {
    if (order == 0) {
        ad::NoGrad ng;
        return m(ad::constant(points)).value().col(0);
    }
    Tensor P = ad::leaf(points);
    Tensor v = m(P);
    for (int k = 0; k < order; ++k) v = col(ad::grad({v}, {P}, {}, k + 1 < order)[0], axis);
    return v.value().col(0);
}

double mae(std::span<const double> exact, std::span<const double> predicted) {
    if (exact.empty()) throw std::invalid_argument("mae: empty input");
    if (exact.size() != predicted.size()) throw std::invalid_argument("mae: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) s += std::abs(exact[i] - predicted[i]);
    return s / static_cast<double>(exact.size());
}

bool ProblemSpec::has_exact() const {
    if (unknowns.empty()) return false;
    for (const auto& u : unknowns)
        if (!u.exact) return false;
    return true;
}

bool ProblemSpec::fractional() const {
    for (const auto& e : equations)
        if (e.derivative.kind == Derivative::Kind::fractional) return true;
    return false;
}

void ProblemSpec::validate() const {
    if (domain.empty() || domain.size() > 3) fail(id, "domain must have 1 to 3 axes");
    for (const auto& iv : domain)
        if (!(iv.b > iv.a)) fail(id, "empty domain interval");
    if (laguerre_nodes && dim() != 1) fail(id, "Laguerre collocation is one-dimensional");
    if (n < 2) fail(id, "need at least two collocation points");
    if (unknowns.empty()) fail(id, "no unknowns");
    const int M = static_cast<int>(unknowns.size());
    if (!residual && equations.empty()) fail(id, "no equations");
    for (const auto& e : equations) {
        if (e.unknown < 0 || e.unknown >= M) fail(id, "equation refers to a missing unknown");
        if (e.kappa == 0.0 && e.terms.empty()) fail(id, "first-kind equation without an operator term");
        if (!e.source) fail(id, "equation without a source");
        for (const auto& r : e.terms) {
            if (r.term < 0 || r.term >= static_cast<int>(terms.size())) fail(id, "missing operator term");
            if (r.param >= static_cast<int>(params.size())) fail(id, "missing trainable parameter");
        }
        if (e.derivative.kind == Derivative::Kind::fractional) {
            const double a = e.derivative.alpha;
            if (!((a > 0 && a < 1) || (a > 1 && a < 2))) fail(id, "fractional order must lie in (0,1) or (1,2)");
            if (dim() != 1) fail(id, "fractional terms are only supported in one dimension");
        }
    }
    for (const auto& t : terms)
        if (t.unknown < 0 || t.unknown >= M) fail(id, "operator term refers to a missing unknown");
    for (const auto& c : conditions) {
        if (c.unknown < 0 || c.unknown >= M) fail(id, "condition refers to a missing unknown");
        if (c.points.cols() != dim() || c.points.rows() != c.values.size())
            fail(id, "condition shape does not match the domain");
        for (Index i = 0; i < c.points.rows(); ++i)
            for (int k = 0; k < dim(); ++k) {
                const double v = c.points(i, k);
                const double hi = laguerre_nodes ? INFINITY : domain[k].b;
                if (v < domain[k].a - 1e-12 || v > hi + 1e-12) fail(id, "condition point outside the domain");
            }
    }
    std::set<std::string> names;
    for (const auto& p : params)
        if (!names.insert(p.name).second) fail(id, "duplicate trainable parameter '" + p.name + "'");
    if (control && !(control->gamma > 0)) fail(id, "gamma must be positive");
}

Session::Session(ProblemSpec spec, SessionOptions opt) : spec_(std::move(spec)), opt_(std::move(opt)) {
    if (opt_.n) spec_.n = opt_.n;
    if (opt_.n_inner) spec_.n_inner = opt_.n_inner;
    if (opt_.gamma != 0.0 && spec_.control) spec_.control->gamma = opt_.gamma;
    spec_.validate();
    c_ = std::make_unique<Compiled>();
    Compiled& c = *c_;
    const int d = spec_.dim();
    const int n = spec_.n;
    const int m = spec_.n_inner ? spec_.n_inner : n;
    c.d = d;

    // Collocation: sorted Gauss-Legendre nodes per axis, tensor grid row-major.
    std::vector<std::vector<double>> wts(d);
    c.axis.resize(d);
    if (spec_.laguerre_nodes) {
        const q::QuadratureRule r = q::make_rule(q::Family::laguerre(), n);
        for (int i = 0; i < n; ++i) c.axis[0].push_back(spec_.domain[0].a + r.nodes[i]);
        wts[0] = r.weights;
    } else {
        for (int k = 0; k < d; ++k) {
            SortedRule s = gauss_sorted(n, spec_.domain[k].a, spec_.domain[k].b);
            c.axis[k] = s.x;
            wts[k] = s.w;
        }
    }
    Index N = 1;
    for (int k = 0; k < d; ++k) N *= static_cast<Index>(c.axis[k].size());
    c.N = N;
    c.X.resize(N, d);
    c.qw.resize(N);
    for (Index row = 0; row < N; ++row) {
        Index rem = row;
        double w = 1.0;
        for (int k = d - 1; k >= 0; --k) {
            const Index sz = static_cast<Index>(c.axis[k].size());
            const Index i = rem % sz;
            rem /= sz;
            c.X(row, k) = c.axis[k][i];
            w *= wts[k][i];
        }
        c.qw[row] = w;
    }

    for (const auto& t : spec_.terms) {
        Compiled::Term ct;
        ct.unknown = t.unknown;
        ct.zeta = t.zeta;
        ct.zeta2 = t.zeta2;
        ct.on_derivative = t.zeta_on_derivative;
        const q::Family fam = inner_family(t, opt_);
        auto box = [&](int k) { return t.box.empty() ? spec_.domain[k] : t.box[k]; };
        switch (t.kind) {
        case TermKind::fredholm: {
            if (d != 1) fail(spec_.id, "1-D Fredholm term on a multi-dimensional domain");
            ops::FredholmAssembly a;
            if (!fam.finite_domain()) {
                const q::QuadratureRule r = q::make_rule(fam, m);
                a = ops::assemble_fredholm(t.k1, c.axis[0], r, true);
            } else {
                if (!std::isfinite(box(0).a) || !std::isfinite(box(0).b))
                    fail(spec_.id, "infinite Fredholm limits need a Laguerre or Hermite rule");
                const q::MappedRule r = q::map_rule(q::make_rule(fam, m), box(0).a, box(0).b);
                a = ops::assemble_fredholm(t.k1, c.axis[0], r, fam.kind != q::FamilyKind::Legendre);
            }
            ct.pts = a.r;
            ct.C = ad::constant(Mat(a.C));
            ct.inner = a.r.size();
            break;
        }
        case TermKind::volterra: {
            if (d != 1) fail(spec_.id, "1-D Volterra term on a multi-dimensional domain");
            if (!fam.finite_domain()) fail(spec_.id, "Volterra inner rule must be on [-1, 1]");
            const double a0 = spec_.domain[0].a;
            ops::Bound g = t.g ? t.g : ops::Bound([a0](double) { return a0; });
            ops::Bound h = t.h ? t.h : ops::Bound([](double x) { return x; });
            const ops::VolterraAssembly a =
                ops::assemble_volterra(t.k1, g, h, c.axis[0], q::make_rule(fam, m), fam.kind != q::FamilyKind::Legendre);
            ct.layout = Compiled::Layout::rowwise;
            ct.inner = a.R.cols();
            ct.pts = Eigen::Map<const VectorXd>(a.R.data(), a.R.size());  // R is row-major
            ct.C = ad::constant(Mat(a.C));
            break;
        }
        case TermKind::fredholm2d: {
            if (d != 2) fail(spec_.id, "2-D Fredholm term needs a 2-D domain");
            const auto rs = q::gauss_legendre(m, box(0).a, box(0).b);
            const auto rt = q::gauss_legendre(m, box(1).a, box(1).b);
            const auto a = ops::assemble_fredholm_2d(t.k2, c.axis[0], c.axis[1], rs, rt);
            ct.pts = a.inner_points();
            ct.C = ad::constant(Mat(a.C));
            ct.inner = a.node_count();
            break;
        }
        case TermKind::volterra2d: {
            if (d != 2) fail(spec_.id, "2-D Volterra term needs a 2-D domain");
            const double a0 = spec_.domain[0].a, a1 = spec_.domain[1].a;
            ops::Bound g = t.g ? t.g : ops::Bound([a0](double) { return a0; });
            ops::Bound h = t.h ? t.h : ops::Bound([](double x) { return x; });
            ops::Bound g2 = t.g2 ? t.g2 : ops::Bound([a1](double) { return a1; });
            ops::Bound h2 = t.h2 ? t.h2 : ops::Bound([](double y) { return y; });
            const auto r = q::make_rule(q::Family::legendre(), m);
            const auto a = ops::assemble_volterra_2d(t.k2, c.axis[0], c.axis[1], g, h, g2, h2, r, r);
            ct.layout = Compiled::Layout::rowwise;
            ct.pts = a.inner_points();
            ct.C = ad::constant(Mat(a.C));
            ct.inner = a.node_count();
            break;
        }
        case TermKind::fredholm3d: {
            if (d != 3) fail(spec_.id, "3-D Fredholm term needs a 3-D domain");
            const auto rr = q::gauss_legendre(m, box(0).a, box(0).b);
            const auto rs = q::gauss_legendre(m, box(1).a, box(1).b);
            const auto rt = q::gauss_legendre(m, box(2).a, box(2).b);
            const auto a = ops::assemble_fredholm_3d(t.k3, c.axis[0], c.axis[1], c.axis[2], rr, rs, rt);
            ct.pts = a.inner_points();
            ct.C = ad::constant(Mat(a.C));
            ct.inner = a.node_count();
            break;
        }
        case TermKind::slice_fredholm:
        case TermKind::slice_volterra: {
            if (d != 2) fail(spec_.id, "slice operators need a 2-D domain");
            const auto& xs = c.axis[0];
            const auto& ts = c.axis[1];
            const Index nx = static_cast<Index>(xs.size()), nt = static_cast<Index>(ts.size());
            Mat C(nx * nt, m);
            ct.pts.resize(nx * m, 2);
            for (Index i = 0; i < nx; ++i) {
                double lo = box(1).a, hi = box(1).b;
                if (t.kind == TermKind::slice_volterra) {
                    lo = t.g ? t.g(xs[i]) : spec_.domain[1].a;
                    hi = t.h ? t.h(xs[i]) : xs[i];
                }
                const auto r = q::gauss_legendre(m, lo, hi);
                const double xi = xs[i];
                const auto k = t.kslice;
                const auto a = ops::assemble_fredholm([k, xi](double tt, double s) { return k(xi, tt, s); }, ts, r);
                C.middleRows(i * nt, nt) = a.C;
                for (int j = 0; j < m; ++j) {
                    ct.pts(i * m + j, 0) = xi;
                    ct.pts(i * m + j, 1) = r.mapped_nodes[j];
                }
                for (Index j = 0; j < nt; ++j) ct.expand.push_back(i);
            }
            ct.layout = Compiled::Layout::slice;
            ct.slices = nx;
            ct.inner = m;
            ct.C = ad::constant(C);
            break;
        }
        }
        c.terms.push_back(std::move(ct));
    }

    {
        ad::NoGrad ng;
        for (const auto& e : spec_.equations) {
            Tensor s = e.source(ad::constant(c.X));
            if (s.rows() == 1 && s.cols() == 1) s = ad::constant(Mat::Constant(N, 1, s.item()));
            if (s.rows() != N || s.cols() != 1) fail(spec_.id, "source must return N x 1 values");
            c.sources.push_back(s);
        }
    }
    if (d == 1) {
        c.caputo_grid.resize(N + 1, 1);
        c.caputo_grid(0, 0) = spec_.domain[0].a;
        c.caputo_grid.bottomRows(N) = c.X;
    }

    const int din = d;
    for (std::size_t k = 0; k < spec_.unknowns.size(); ++k) {
        std::vector<int> widths{din};
        for (int h : opt_.hidden) widths.push_back(h);
        widths.push_back(1);
        nets_.emplace_back(widths, Activation::tanh, opt_.seed + 7919ULL * k);
    }
    for (const auto& p : spec_.params)
        params_.push_back(ad::leaf(Mat::Constant(p.per_node ? N : 1, 1, p.init)));
}

Session::~Session() = default;

int Session::n_points() const { return static_cast<int>(c_->N); }
const Mat& Session::X() const { return c_->X; }
const VectorXd& Session::quad_weights() const { return c_->qw; }
double Session::gamma() const { return spec_.control ? spec_.control->gamma : 0.0; }

std::vector<Tensor> Session::parameters() const {
    std::vector<Tensor> all;
    for (const auto& net : nets_)
        for (const auto& p : net.parameters()) all.push_back(p);
    for (const auto& p : params_) all.push_back(p);
    return all;
}

VectorXd Session::flat() const { return flatten(parameters()); }

void Session::set_flat(const VectorXd& theta) {
    auto all = parameters();
    unflatten(theta, all);
}

std::vector<Model> Session::network_models() const {
    std::vector<Model> out;
    for (const auto& net : nets_) {
        const Mlp* p = &net;
        out.push_back([p](const Tensor& X) { return p->forward(X); });
    }
    return out;
}

std::vector<Model> Session::exact_models() const {
    std::vector<Model> out;
    for (const auto& u : spec_.unknowns) {
        if (!u.exact) throw std::logic_error(spec_.id + ": unknown '" + u.name + "' has no exact solution");
        out.push_back(u.exact);
    }
    return out;
}

std::vector<Tensor> Session::param_values() const { return params_; }

std::vector<Tensor> Session::truth_params() const {
    std::vector<Tensor> out;
    for (const auto& p : spec_.params) {
        if (p.per_node) {
            Mat v(c_->N, 1);
            for (Index i = 0; i < c_->N; ++i) v(i, 0) = p.truth_fn ? p.truth_fn(c_->X(i, 0)) : kNaN;
            out.push_back(ad::constant(v));
        } else {
            out.push_back(ad::constant(p.truth));
        }
    }
    return out;
}

// ---------------------------------------------------------------- Fields

Fields::Fields(const Session& s, const std::vector<Model>& models, const std::vector<Tensor>& params)
    : s_(s), models_(models), params_(params) {
    if (models_.size() != s.spec().unknowns.size()) throw std::invalid_argument("Fields: one model per unknown");
    Xleaf_ = ad::leaf(s.X());
    U_.resize(models_.size());
}

int Fields::rows() const { return s_.n_points(); }

Tensor Fields::x(int axis) const { return ad::constant(Mat(s_.X().col(axis))); }

Tensor Fields::u(int k) {
    if (!U_.at(k).defined()) U_[k] = models_[k](Xleaf_);
    return U_[k];
}

Tensor Fields::d(int k, int axis, int order) {
    if (order == 0) return u(k);
    auto key = std::make_tuple(k, axis, order);
    auto it = D_.find(key);
    if (it != D_.end()) return it->second;
    Tensor prev = d(k, axis, order - 1);
    Tensor g = col(ad::grad({prev}, {Xleaf_}, {}, true)[0], axis);
    D_[key] = g;
    return g;
}

Tensor Fields::at(int k, const Mat& points) { return models_.at(k)(ad::constant(points)); }

Tensor Fields::d_at(int k, const Mat& points, int axis, int order) {
    if (order == 0) return at(k, points);
    Tensor P = ad::leaf(points);
    Tensor v = models_.at(k)(P);
    for (int i = 0; i < order; ++i) v = col(ad::grad({v}, {P}, {}, true)[0], axis);
    return v;
}

Tensor Fields::caputo(int k, double alpha) {
    auto key = std::make_pair(k, alpha);
    auto it = caputo_.find(key);
    if (it != caputo_.end()) return it->second;
    const auto& c = s_.compiled();
    const double frac = alpha > 1 ? alpha - 1 : alpha;
    auto mit = c.caputo_rows.find(frac);
    if (mit == c.caputo_rows.end()) {
        const auto& g = c.caputo_grid;
        std::vector<double> grid(g.data(), g.data() + g.size());
        const auto cm = fractional::caputo_matrix(grid, frac);
        mit = c.caputo_rows.emplace(frac, ad::constant(Mat(cm.M.bottomRows(c.N)))).first;
    }
    // The grid is [a; x], so only the start point needs a fresh evaluation.
    const Mat start = c.caputo_grid.topRows(1);
    Tensor v = alpha > 1 ? ad::concat_rows({d_at(k, start, 0, 1), d(k, 0, 1)})
                         : ad::concat_rows({at(k, start), u(k)});
    Tensor out = ad::matmul(mit->second, v);
    caputo_[key] = out;
    return out;
}

Tensor Fields::term(int i) {
    auto it = terms_.find(i);
    if (it != terms_.end()) return it->second;
    const auto& t = s_.compiled().terms.at(i);
    Tensor vals;
    if (t.on_derivative) {
        Tensor P = ad::leaf(t.pts);
        Tensor v = models_.at(t.unknown)(P);
        Tensor dv = col(ad::grad({v}, {P}, {}, true)[0], 0);
        vals = t.zeta2(v, dv);
    } else {
        vals = at(t.unknown, t.pts);
        if (t.zeta) vals = t.zeta(vals);
    }
    const Index N = s_.compiled().N;
    Tensor out;
    switch (t.layout) {
    case Session::Compiled::Layout::matvec:
        out = ad::matmul(t.C, vals);
        break;
    case Session::Compiled::Layout::rowwise:
        out = ad::reduce_to(t.C * ad::reshape(vals, N, t.inner), N, 1);
        break;
    case Session::Compiled::Layout::slice:
        out = ad::reduce_to(t.C * ad::gather_rows(ad::reshape(vals, t.slices, t.inner), t.expand), N, 1);
        break;
    }
    terms_[i] = out;
    return out;
}

Tensor Fields::delayed(int k, double lag) {
    const auto& spec = s_.spec();
    if (!spec.control || !spec.control->history) throw std::logic_error(spec.id + ": no history function");
    const Mat& X = s_.X();
    const double a = spec.domain[0].a;
    const Index N = X.rows();
    std::vector<Index> inside;
    std::vector<double> pts;
    Mat hist = Mat::Zero(N, 1);
    for (Index i = 0; i < N; ++i) {
        const double t = X(i, 0) - lag;
        if (t >= a) {
            inside.push_back(i);
            pts.push_back(t);
        } else {
            hist(i, 0) = spec.control->history(t);
        }
    }
    Tensor out = ad::constant(hist);
    if (!inside.empty()) out = out + ad::scatter_rows(at(k, column(pts)), inside, N);
    return out;
}

// ---------------------------------------------------------------- loss

std::vector<Tensor> Session::residuals(const std::vector<Model>& models, const std::vector<Tensor>& params) const {
    Fields f(*this, models, params);
    return residuals_in(f);
}

std::vector<Tensor> Session::residuals_in(Fields& f) const {
    if (spec_.residual) return spec_.residual(f);
    std::vector<Tensor> out;
    for (std::size_t q = 0; q < spec_.equations.size(); ++q) {
        const Equation& e = spec_.equations[q];
        Tensor r = -c_->sources[q];
        if (e.kappa != 0.0) {
            Tensor D;
            switch (e.derivative.kind) {
            case Derivative::Kind::none: D = f.u(e.unknown); break;
            case Derivative::Kind::ordinal: D = f.d(e.unknown, e.derivative.axis, e.derivative.order); break;
            case Derivative::Kind::fractional: D = f.caputo(e.unknown, e.derivative.alpha); break;
            }
            r = r + e.kappa * D;
        }
        if (e.u_coef != 0.0) r = r + e.u_coef * f.u(e.unknown);
        for (const auto& ref : e.terms) {
            Tensor I = f.term(ref.term);
            if (ref.param >= 0) I = f.param(ref.param) * I;
            r = r - ref.sign * I;
        }
        out.push_back(r);
    }
    return out;
}

LossParts Session::loss(const std::vector<Model>& models, const std::vector<Tensor>& params) const {
    Fields f(*this, models, params);
    const std::vector<Tensor> res = residuals_in(f);
    LossParts lp;
    Index rows = 0;
    Tensor ss = ad::constant(0.0);
    for (const auto& r : res) {
        ss = ss + ad::sum(ad::square(r));
        rows += r.rows();
    }
    Tensor res_mse = ss * (1.0 / static_cast<double>(std::max<Index>(rows, 1)));
    Tensor cond = ad::constant(0.0);
    for (const auto& c : spec_.conditions) {
        if (c.weight == 0.0) continue;
        Tensor pred = f.d_at(c.unknown, c.points, c.axis, c.order);
        Tensor diff = pred - ad::constant(Mat(c.values));
        cond = cond + c.weight * ad::mean(ad::square(diff));
    }
    lp.residual_mse = res_mse.item();
    lp.condition_sum = cond.item();
    if (spec_.control) {
        Tensor L = spec_.control->running_cost(f);
        Tensor J = ad::sum(L * ad::constant(Mat(c_->qw)));
        lp.j = J.item();
        lp.loss = J + spec_.control->gamma * (res_mse + cond);
    } else {
        lp.loss = res_mse + cond;
    }
    return lp;
}

double Session::loss_and_grad(const VectorXd& theta, VectorXd& grad) {
    set_flat(theta);
    LossParts lp = loss(network_models(), params_);
    grad = flat_gradient(lp.loss, parameters());
    return lp.loss.item();
}

ad::Mat Session::test_grid() const {
    const int d = spec_.dim();
    const auto& dom = spec_.test_domain.empty() ? spec_.domain : spec_.test_domain;
    const int per = d == 1 ? 200 : static_cast<int>(std::ceil(std::pow(200.0, 1.0 / d) - 1e-9));
    Index total = 1;
    for (int k = 0; k < d; ++k) total *= per;
    Mat G(total, d);
    for (Index row = 0; row < total; ++row) {
        Index rem = row;
        for (int k = d - 1; k >= 0; --k) {
            const Index i = rem % per;
            rem /= per;
            G(row, k) = dom[k].a + (dom[k].b - dom[k].a) * static_cast<double>(i) / (per - 1);
        }
    }
    return G;
}

std::vector<std::pair<std::string, double>> Session::errors() const {
    std::vector<std::pair<std::string, double>> out;
    const Mat G = test_grid();
    for (std::size_t k = 0; k < spec_.unknowns.size(); ++k) {
        const auto& u = spec_.unknowns[k];
        if (!u.exact) continue;
        const VectorXd ex = evaluate_model(u.exact, G);
        const VectorXd pr = nets_[k].predict(G).col(0);
        out.emplace_back(u.name, mae(std::span<const double>(ex.data(), ex.size()),
                                     std::span<const double>(pr.data(), pr.size())));
    }
    return out;
}

ProblemSpec permute_unknowns(const ProblemSpec& s, const std::vector<int>& perm) {
    const std::size_t M = s.unknowns.size();
    if (perm.size() != M) throw std::invalid_argument("permute_unknowns: wrong permutation length");
    ProblemSpec p = s;
    for (std::size_t k = 0; k < M; ++k) p.unknowns[perm[k]] = s.unknowns[k];
    for (auto& t : p.terms) t.unknown = perm[t.unknown];
    for (auto& c : p.conditions) c.unknown = perm[c.unknown];
    for (auto& e : p.equations) e.unknown = perm[e.unknown];
    std::stable_sort(p.equations.begin(), p.equations.end(),
                     [](const Equation& a, const Equation& b) { return a.unknown < b.unknown; });
    return p;
}

}  // namespace qpinn
