#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "qpinn/problems.hpp"

namespace qpinn {

namespace {

using T = Tensor;
using ad::Mat;
using F1 = std::function<T(const T&)>;
using F2 = std::function<T(const T&, const T&)>;
using F3 = std::function<T(const T&, const T&, const T&)>;
using std::numbers::e;
using std::numbers::pi;

Model m1(F1 f) {
    return [f](const T& X) { return f(col(X, 0)); };
}
Model m2(F2 f) {
    return [f](const T& X) { return f(col(X, 0), col(X, 1)); };
}
Model m3(F3 f) {
    return [f](const T& X) { return f(col(X, 0), col(X, 1), col(X, 2)); };
}
T konst(const T& like, double c) { return 0.0 * like + c; }

const Zeta square = [](const T& u) { return ad::square(u); };
const Zeta cube = [](const T& u) { return u * u * u; };
const Zeta expo = [](const T& u) { return ad::exp(u); };

OperatorTerm fredholm(ops::Kernel1 k, Zeta z = {}, int unknown = 0) {
    OperatorTerm t;
    t.kind = TermKind::fredholm;
    t.k1 = std::move(k);
    t.zeta = std::move(z);
    t.unknown = unknown;
    return t;
}

OperatorTerm volterra(ops::Kernel1 k, Zeta z = {}, int unknown = 0) {
    OperatorTerm t = fredholm(std::move(k), std::move(z), unknown);
    t.kind = TermKind::volterra;
    return t;
}

Condition condition(const Model& exact, int unknown, const Mat& pts, const std::string& kind, int order = 0,
                    int axis = 0) {
    Condition c;
    c.kind = kind;
    c.unknown = unknown;
    c.points = pts;
    c.order = order;
    c.axis = axis;
    c.values = evaluate_model(exact, pts, order, axis);
    return c;
}

Mat points1(std::initializer_list<double> xs) {
    Mat m(static_cast<Eigen::Index>(xs.size()), 1);
    Eigen::Index i = 0;
    for (double x : xs) m(i++, 0) = x;
    return m;
}

// Points (x_i, t0) for an initial line of a two-input problem.
Mat line_t(double t0, int count) {
    Mat m(count, 2);
    for (int i = 0; i < count; ++i) {
        m(i, 0) = static_cast<double>(i) / (count - 1);
        m(i, 1) = t0;
    }
    return m;
}

opt::Schedule lbfgs(int epochs, double lr = 0.1) {
    opt::Schedule s;
    s.lbfgs_epochs = epochs;
    s.lbfgs_lr = lr;
    return s;
}

// kappa u = S + sum of terms, one unknown on a 1-D domain.
ProblemSpec scalar_ie(const std::string& id, const std::string& title, Interval dom, double kappa, Model exact,
                      Model source, std::vector<OperatorTerm> terms) {
    ProblemSpec s;
    s.id = id;
    s.title = title;
    s.domain = {dom};
    s.unknowns = {{"u", std::move(exact)}};
    s.terms = std::move(terms);
    Equation eq;
    eq.kappa = kappa;
    eq.source = std::move(source);
    for (int i = 0; i < static_cast<int>(s.terms.size()); ++i) eq.terms.push_back({i, 1.0, -1});
    s.equations = {eq};
    s.schedule = lbfgs(150);
    return s;
}

// ------------------------------------------------------------ one-dimensional IEs

std::vector<ProblemSpec> table3() {
    std::vector<ProblemSpec> v;
    const Interval u01{0.0, 1.0};
    const Model x_ex = m1([](const T& x) { return x + ad::exp(x); });
    const Model ex = m1([](const T& x) { return ad::exp(x); });

    v.push_back(scalar_ie("t3r1", "Fredholm, kernel t", u01, 1, x_ex,
                          m1([](const T& x) { return ad::exp(x) + x - 4.0 / 3.0; }),
                          {fredholm([](double, double t) { return t; })}));
    v.push_back(scalar_ie("t3r2", "Fredholm, kernel t - x", u01, 1, x_ex,
                          m1([](const T& x) { return ad::exp(x) + 0.5 * x - 4.0 / 3.0 + e * x; }),
                          {fredholm([](double x, double t) { return t - x; })}));
    v.push_back(scalar_ie("t3r3", "Fredholm, nonlinearity exp", u01, 1, m1([](const T& x) { return x; }),
                          m1([](const T& x) { return e * x; }),
                          {fredholm([](double x, double) { return -x; }, expo)}));
    v.push_back(scalar_ie("t3r4", "Volterra, kernel t - x", u01, 1, x_ex,
                          m1([](const T& x) { return 2.0 * ad::exp(x) - 1.0 + x * x * x / 6.0; }),
                          {volterra([](double x, double t) { return t - x; })}));
    v.push_back(scalar_ie("t3r5", "Volterra first kind, kernel -t", u01, 0, m1([](const T& x) { return ad::sin(x); }),
                          m1([](const T& x) { return ad::sin(x) - x * ad::cos(x); }),
                          {volterra([](double, double t) { return -t; })}));
    v.push_back(scalar_ie("t3r6", "Volterra first kind, nonlinearity square", u01, 0, ex,
                          m1([](const T& x) { return ad::exp(2.0 * x) - ad::exp(x); }),
                          {volterra([](double x, double t) { return -std::exp(x - t); }, square)}));
    v.push_back(scalar_ie("t3r7", "Volterra, kernel 1", u01, 1, ex, m1([](const T& x) { return konst(x, 1.0); }),
                          {volterra([](double, double) { return 1.0; })}));
    v.push_back(scalar_ie("t3r8", "Volterra, nonlinearity square", u01, 1, ex,
                          m1([](const T& x) { return ad::exp(x) - 0.5 * (ad::exp(2.0 * x) - 1.0); }),
                          {volterra([](double, double) { return 1.0; }, square)}));
    v.push_back(scalar_ie(
        "t3r9", "Volterra-Fredholm, kernels t - x", u01, 1, x_ex,
        m1([](const T& x) { return 2.0 * ad::exp(x) - 0.5 * x - 7.0 / 3.0 + x * x * x / 6.0 + e * x; }),
        {fredholm([](double x, double t) { return t - x; }), volterra([](double x, double t) { return t - x; })}));
    v.push_back(scalar_ie("t3r10", "Volterra-Fredholm, kernels x and 1", u01, 1,
                          m1([](const T& x) { return x * ad::exp(x); }),
                          m1([](const T& x) { return ad::exp(x) - 1.0 - x; }),
                          {fredholm([](double x, double) { return x; }), volterra([](double, double) { return 1.0; })}));

    // Abel rows: the weakly singular factor sits at t = x, the right end of
    // every inner interval, which is where Jacobi(-1/2, 0) puts its weight.
    auto abel = [](double x, double t) { return -1.0 / std::sqrt(x - t); };
    for (int r = 0; r < 2; ++r) {
        OperatorTerm t = volterra(abel, r == 0 ? Zeta{} : cube);
        t.family = quadrature::Family::jacobi(-0.5, 0.0);
        ProblemSpec s = scalar_ie(r == 0 ? "t3r11" : "t3r12", r == 0 ? "Abel, linear" : "Abel, nonlinearity cube",
                                  u01, 0, m1([](const T& x) { return x; }),
                                  r == 0 ? m1([](const T& x) { return 4.0 / 3.0 * ad::pow(x, 1.5); })
                                         : m1([](const T& x) { return 32.0 / 35.0 * ad::pow(x, 3.5); }),
                                  {t});
        s.residual_tol = 1e-2;
        v.push_back(s);
    }

    OperatorTerm lag = fredholm([](double x, double t) { return std::exp(-(x + t)); });
    lag.family = quadrature::Family::laguerre();
    ProblemSpec s = scalar_ie("t3r13", "Fredholm on a half line", {0.0, INFINITY}, 1,
                              m1([](const T& x) { return 2.0 * ad::exp(-x); }),
                              m1([](const T& x) { return ad::exp(-x); }), {lag});
    s.laguerre_nodes = true;
    s.n = 20;
    s.test_domain = {{0.0, 10.0}};
    v.push_back(s);
    return v;
}

// ------------------------------------------------------------ ordinal IDEs

ProblemSpec ide(const std::string& id, const std::string& title, int order, double kappa, Model exact, Model source,
                std::vector<OperatorTerm> terms) {
    ProblemSpec s = scalar_ie(id, title, {0.0, 1.0}, kappa, exact, std::move(source), std::move(terms));
    if (order > 0) s.equations[0].derivative = Derivative::ordinal(order);
    s.conditions = {condition(exact, 0, points1({0.0, 1.0}), "bc")};
    return s;
}

std::vector<ProblemSpec> table4() {
    std::vector<ProblemSpec> v;
    const Model ex = m1([](const T& x) { return ad::exp(x); });
    auto one = [](double, double) { return 1.0; };
    auto x_minus_t = [](double x, double t) { return x - t; };

    v.push_back(ide("t4r1", "Fredholm IDE, second order", 2, 1, ex,
                    m1([](const T& x) { return 1.0 - e + ad::exp(x); }), {fredholm(one)}));
    v.push_back(ide("t4r2", "Fredholm IDE, first order", 1, 1, m1([](const T& x) { return ad::sin(x); }),
                    m1([](const T& x) { return ad::cos(x) - 1.0 + std::cos(1.0); }), {fredholm(one)}));
    v.push_back(ide("t4r3", "Fredholm IDE, second order", 2, 1, m1([](const T& x) { return ad::exp(x) + x; }),
                    m1([](const T& x) { return 0.5 - e + ad::exp(x); }), {fredholm(one)}));
    v.push_back(ide("t4r4", "Fredholm IDE, nonlinearity square", 1, 1, m1([](const T& x) { return x; }),
                    m1([](const T& x) { return 1.25 - x * x / 3.0; }),
                    {fredholm([](double x, double t) { return x * x - t; }, square)}));

    OperatorTerm d1 = volterra([](double x, double t) { return -(x - t + 1.0); });
    d1.zeta_on_derivative = true;
    d1.zeta2 = [](const T&, const T& du) { return du; };
    v.push_back(ide("t4r5", "Volterra, derivative under the integral", 0, 0,
                    m1([](const T& x) { return 0.5 * (ad::exp(x) + ad::exp(-x)) + x; }),
                    m1([](const T& x) { return ad::exp(x) + 0.5 * x * x - 1.0; }), {d1}));

    OperatorTerm d2 = volterra([](double x, double t) { return -(x - t); });
    d2.zeta_on_derivative = true;
    d2.zeta2 = [](const T& u, const T& du) { return ad::square(u) + du; };
    v.push_back(ide("t4r6", "Volterra, square plus derivative", 0, 0, m1([](const T& x) { return ad::sin(x); }),
                    m1([](const T& x) {
                        return 7.0 / 8.0 + 0.25 * x * x - ad::cos(x) + 0.125 * ad::cos(2.0 * x);
                    }),
                    {d2}));

    v.push_back(ide("t4r7", "Volterra IDE, second order", 2, 1, ex, m1([](const T& x) { return 1.0 + x; }),
                    {volterra(x_minus_t)}));
    v.push_back(ide("t4r8", "Volterra IDE, nonlinearity square", 1, 1,
                    m1([](const T& x) { return 1.0 + ad::exp(-x); }),
                    m1([](const T& x) {
                        return 2.25 - 2.5 * x - 0.5 * x * x - 3.0 * ad::exp(-x) - 0.25 * ad::exp(-2.0 * x);
                    }),
                    {volterra(x_minus_t, square)}));
    v.push_back(ide("t4r9", "Volterra-Fredholm IDE, kernel x - t", 1, 1, m1([](const T& x) { return 2.0 + 6.0 * x; }),
                    m1([](const T& x) { return 9.0 - 5.0 * x - x * x - x * x * x; }),
                    {fredholm(x_minus_t), volterra(x_minus_t)}));
    v.push_back(ide("t4r10", "Volterra-Fredholm IDE, kernel 1", 1, 1, m1([](const T& x) { return x * ad::exp(x); }),
                    m1([](const T& x) { return 2.0 * ad::exp(x) - 2.0; }), {fredholm(one), volterra(one)}));
    return v;
}

// ------------------------------------------------------------ partial IDEs

ProblemSpec pide(const std::string& id, const std::string& title, Model exact, Model source, TermKind kind,
                 std::function<double(double, double, double)> kernel, Zeta zeta = {}) {
    ProblemSpec s;
    s.id = id;
    s.title = title;
    s.domain = {{0.0, 1.0}, {0.0, 1.0}};
    s.n = 15;
    s.unknowns = {{"u", exact}};
    OperatorTerm t;
    t.kind = kind;
    t.kslice = std::move(kernel);
    t.zeta = std::move(zeta);
    s.terms = {t};
    Equation eq;
    eq.derivative = Derivative::ordinal(1, 1);
    eq.source = std::move(source);
    eq.terms = {{0, 1.0, -1}};
    s.equations = {eq};
    s.conditions = {condition(exact, 0, line_t(0.0, 21), "ic")};
    s.schedule = lbfgs(150);
    return s;
}

std::vector<ProblemSpec> table5() {
    std::vector<ProblemSpec> v;
    const Model sxt = m2([](const T& x, const T& t) { return ad::sin(x * t); });
    auto xcos = [](const T& x, const T& t) { return x * ad::cos(t * x); };
    auto one = [](double, double, double) { return 1.0; };
    v.push_back(pide("t5r1", "Fredholm PIDE, kernel 1", sxt,
                     m2([=](const T& x, const T& t) { return xcos(x, t) + (ad::cos(x) - 1.0) / x; }),
                     TermKind::slice_fredholm, one));
    v.push_back(pide("t5r2", "Fredholm PIDE, kernel x^2", sxt,
                     m2([=](const T& x, const T& t) { return xcos(x, t) - x + x * ad::cos(x); }),
                     TermKind::slice_fredholm, [](double x, double, double) { return x * x; }));
    v.push_back(pide("t5r3", "Fredholm PIDE, kernel x^2 sin t", sxt,
                     m2([=](const T& x, const T& t) {
                         return xcos(x, t) - x * ad::sin(t) + x * ad::sin(t) * ad::cos(x);
                     }),
                     TermKind::slice_fredholm, [](double x, double t, double) { return x * x * std::sin(t); }));
    v.push_back(pide("t5r4", "Fredholm PIDE, kernel x t s", sxt,
                     m2([=](const T& x, const T& t) {
                         return xcos(x, t) + t * (x * ad::cos(x) - ad::sin(x)) / x;
                     }),
                     TermKind::slice_fredholm, [](double x, double t, double s) { return x * t * s; }));
    v.push_back(pide("t5r5", "Fredholm PIDE, nonlinearity square", sxt,
                     m2([=](const T& x, const T& t) {
                         return xcos(x, t) + (ad::cos(x) * ad::sin(x) - x) / (2.0 * x);
                     }),
                     TermKind::slice_fredholm, one, square));
    v.push_back(pide("t5r6", "Volterra PIDE, kernel 1", sxt,
                     m2([=](const T& x, const T& t) { return xcos(x, t) + (ad::cos(x * x) - 1.0) / x; }),
                     TermKind::slice_volterra, one));
    v.push_back(pide("t5r7", "Volterra PIDE, exponential solution",
                     m2([](const T& x, const T& t) { return ad::exp(x - t); }),
                     m2([](const T& x, const T& t) { return -ad::exp(x - t) + 1.0 - ad::exp(x); }),
                     TermKind::slice_volterra, one));
    return v;
}

// ------------------------------------------------------------ multi-dimensional IEs

ProblemSpec multi(const std::string& id, const std::string& title, std::vector<Interval> dom, Model exact,
                  Model source, OperatorTerm term, double sign) {
    ProblemSpec s;
    s.id = id;
    s.title = title;
    s.domain = std::move(dom);
    s.n = s.domain.size() == 3 ? 8 : 15;
    s.n_inner = s.domain.size() == 3 ? 8 : 10;
    s.unknowns = {{"u", exact}};
    s.terms = {std::move(term)};
    Equation eq;
    eq.source = std::move(source);
    eq.terms = {{0, sign, -1}};
    s.equations = {eq};
    s.schedule = lbfgs(150);
    return s;
}

std::vector<ProblemSpec> table7() {
    std::vector<ProblemSpec> v;
    const std::vector<Interval> box{{0.0, 1.0}, {0.0, 2.0}};
    OperatorTerm f2;
    f2.kind = TermKind::fredholm2d;
    f2.k2 = [](double x, double, double, double t) { return -0.5 * x * t; };
    v.push_back(multi("t7r1", "2-D Fredholm", box, m2([](const T& x, const T& y) { return x * x * y; }),
                      m2([](const T& x, const T& y) { return x * x * y + 4.0 / 9.0 * x; }), f2, 1.0));

    OperatorTerm f3;
    f3.kind = TermKind::fredholm3d;
    f3.k3 = [](double, double, double, double r, double s, double) { return std::exp(s * r); };
    v.push_back(multi("t7r2", "3-D Fredholm", {{0.0, 1.0}, {-1.0, 1.0}, {1.0, 2.0}},
                      m3([](const T& x, const T& y, const T&) { return x * x * y * ad::exp(x); }),
                      m3([](const T& x, const T& y, const T&) {
                          return x * x * y * ad::exp(x) - (9.0 - e * e) / 4.0;
                      }),
                      f3, 1.0));

    const Model xy = m2([](const T& x, const T& y) { return x + y; });
    auto vol = [](ops::Kernel2 k) {
        OperatorTerm t;
        t.kind = TermKind::volterra2d;
        t.k2 = std::move(k);
        return t;
    };
    auto poly = [](const T& x, const T& y) { return 0.5 * (y * y * x + x * x * y); };
    v.push_back(multi("t7r3", "2-D Volterra, kernel exp(x+y+s+t)", box, xy,
                      m2([](const T& x, const T& y) {
                          return (x + y - 2.0) * ad::exp(2.0 * x + 2.0 * y) + (2.0 - y) * ad::exp(x + 2.0 * y) +
                                 (2.0 - x) * ad::exp(2.0 * x + y) + x + y - 2.0 * ad::exp(x + y);
                      }),
                      vol([](double x, double y, double s, double t) { return std::exp(x + y + s + t); }), -1.0));
    v.push_back(multi("t7r4", "2-D Volterra, kernel exp(x+y)", box, xy,
                      m2([=](const T& x, const T& y) { return x + y + ad::exp(x + y) * poly(x, y); }),
                      vol([](double x, double y, double, double) { return std::exp(x + y); }), -1.0));
    v.push_back(multi("t7r5", "2-D Volterra, kernel exp(y)", box, xy,
                      m2([=](const T& x, const T& y) { return x + y + ad::exp(y) * poly(x, y); }),
                      vol([](double, double y, double, double) { return std::exp(y); }), -1.0));
    v.push_back(multi("t7r6", "2-D Volterra, kernel exp(x)", box, xy,
                      m2([=](const T& x, const T& y) { return x + y + ad::exp(x) * poly(x, y); }),
                      vol([](double x, double, double, double) { return std::exp(x); }), -1.0));
    v.push_back(multi("t7r7", "2-D Volterra, kernel 1", box, xy,
                      m2([=](const T& x, const T& y) { return x + y + poly(x, y); }),
                      vol([](double, double, double, double) { return 1.0; }), -1.0));
    return v;
}

// ------------------------------------------------------------ systems

struct SystemRow {
    std::string id, title;
    Interval dom;
    double kappa;
    int order;
    bool volterra_kind;
    Model exact1, exact2, source1, source2;
    ops::Kernel1 k11, k12, k21, k22;
};

ProblemSpec system(const SystemRow& r) {
    ProblemSpec s;
    s.id = r.id;
    s.title = r.title;
    s.domain = {r.dom};
    s.unknowns = {{"u1", r.exact1}, {"u2", r.exact2}};
    auto make = r.volterra_kind ? volterra : fredholm;
    s.terms = {make(r.k11, {}, 0), make(r.k12, {}, 1), make(r.k21, {}, 0), make(r.k22, {}, 1)};
    for (int q = 0; q < 2; ++q) {
        Equation eq;
        eq.unknown = q;
        eq.kappa = r.kappa;
        if (r.order > 0) eq.derivative = Derivative::ordinal(r.order);
        eq.source = q == 0 ? r.source1 : r.source2;
        eq.terms = {{2 * q, 1.0, -1}, {2 * q + 1, 1.0, -1}};
        s.equations.push_back(eq);
    }
    const Mat ends = r.order >= 2 ? points1({r.dom.a, r.dom.b}) : points1({r.dom.a});
    if (r.order > 0)
        for (int q = 0; q < 2; ++q) s.conditions.push_back(condition(q ? r.exact2 : r.exact1, q, ends, "bc"));
    s.schedule = lbfgs(150);
    return s;
}

std::vector<ProblemSpec> table8() {
    std::vector<SystemRow> rows;
    rows.push_back({"t8r1", "Fredholm system", {0.0, pi}, 1, 0, false,
                    m1([](const T& x) { return ad::sin(x) + ad::cos(x); }),
                    m1([](const T& x) { return ad::sin(x) - ad::cos(x); }),
                    m1([](const T& x) { return ad::sin(x) + ad::cos(x) - 4.0 * x; }),
                    m1([](const T& x) { return ad::sin(x) - ad::cos(x); }),
                    [](double x, double) { return x; }, [](double x, double) { return x; },
                    [](double, double) { return 1.0; }, [](double, double) { return -1.0; }});
    rows.push_back({"t8r2", "Volterra system", {0.0, 1.0}, 1, 0, true, m1([](const T& x) { return x; }),
                    m1([](const T& x) { return x * x; }),
                    m1([](const T& x) { return x - ad::pow(x, 4.0) / 6.0; }),
                    m1([](const T& x) { return x * x - ad::pow(x, 5.0) / 12.0; }),
                    [](double x, double t) { return (x - t) * (x - t); }, [](double x, double t) { return x - t; },
                    [](double x, double t) { return (x - t) * (x - t) * (x - t); },
                    [](double x, double t) { return (x - t) * (x - t); }});
    rows.push_back({"t8r3", "Volterra system, first kind", {0.0, 1.0}, 0, 0, true,
                    m1([](const T& x) { return 1.0 + x; }), m1([](const T& x) { return 1.0 + x * x; }),
                    m1([](const T& x) { return 0.5 * x * x + 0.5 * x * x * x + ad::pow(x, 4.0) / 12.0; }),
                    m1([](const T& x) { return 1.5 * x * x - x * x * x / 6.0 + ad::pow(x, 4.0) / 12.0; }),
                    [](double x, double t) { return -(x - t - 1.0); }, [](double x, double t) { return -(x - t + 1.0); },
                    [](double x, double t) { return -(x - t + 1.0); }, [](double x, double t) { return -(x - t - 1.0); }});
    rows.push_back({"t8r4", "Fredholm IDE system, second order", {0.0, pi / 2}, 1, 2, false,
                    m1([](const T& x) { return ad::cos(x); }), m1([](const T& x) { return ad::sin(x); }),
                    m1([](const T& x) { return -ad::cos(x) - (2.0 - pi / 2); }),
                    m1([](const T& x) { return -ad::sin(x) + (2.0 - pi / 2); }),
                    [](double x, double t) { return x - t; }, [](double x, double t) { return -(x - t); },
                    [](double x, double t) { return x + t; }, [](double x, double t) { return -(x + t); }});
    rows.push_back({"t8r5", "Volterra IDE system, first order", {0.0, 1.0}, 1, 1, true,
                    m1([](const T& x) { return 1.0 + x + x * x; }), m1([](const T& x) { return 1.0 - x - x * x; }),
                    m1([](const T& x) { return 1.0 + x - 0.5 * x * x + x * x * x / 3.0; }),
                    m1([](const T& x) { return -1.0 - 3.0 * x - 1.5 * x * x - x * x * x / 3.0; }),
                    [](double x, double t) { return x - t; }, [](double x, double t) { return x - t + 1.0; },
                    [](double x, double t) { return x - t + 1.0; }, [](double x, double t) { return x - t; }});
    std::vector<ProblemSpec> v;
    for (const auto& r : rows) v.push_back(system(r));
    return v;
}

// ------------------------------------------------------------ hyperparameter study

std::vector<ProblemSpec> hyper() {
    std::vector<ProblemSpec> v;
    const Model x_ex = m1([](const T& x) { return x + ad::exp(x); });
    const Model s2x = m1([](const T& x) { return ad::sin(2.0 * x); });
    auto t = [](double, double tt) { return tt; };
    v.push_back(scalar_ie("ex1", "Fredholm, smooth solution", {0.0, 1.0}, 1, x_ex,
                          m1([](const T& x) { return ad::exp(x) + x - 4.0 / 3.0; }), {fredholm(t)}));
    v.push_back(scalar_ie("ex2", "Fredholm, oscillating solution", {0.0, pi}, 1, s2x,
                          m1([](const T& x) { return ad::sin(2.0 * x) + pi / 2; }), {fredholm(t)}));
    v.push_back(scalar_ie("ex3", "Volterra, smooth solution", {0.0, 1.0}, 1, x_ex,
                          m1([](const T& x) {
                              return x + 2.0 * ad::exp(x) - 1.0 - x * x * x / 3.0 - x * ad::exp(x);
                          }),
                          {volterra(t)}));
    v.push_back(scalar_ie("ex4", "Volterra, oscillating solution", {0.0, pi}, 1, s2x,
                          m1([](const T& x) { return 0.75 * ad::sin(2.0 * x) + 0.5 * x * ad::cos(2.0 * x); }),
                          {volterra(t)}));
    return v;
}

// ------------------------------------------------------------ inverse problems

ProblemSpec inverse_scalar(const std::string& id, const std::string& title, Model exact, Model source,
                           OperatorTerm term, double kappa_true) {
    ProblemSpec s = scalar_ie(id, title, {0.0, 1.0}, 1, exact, std::move(source), {std::move(term)});
    s.params = {{"kappa", false, 0.0, kappa_true, {}}};
    s.equations[0].terms[0].param = 0;
    s.conditions = {condition(exact, 0, points1({0.0, 0.25, 0.5, 0.75, 1.0}), "data")};
    return s;
}

// Monomial coefficients of the fractional inverse solution, expanded around 0.
std::vector<double> frac_poly() {
    // -3 + 2x - 4(x-2)^3/3 + 4(x-2)^5/15 - 8(x-2)^7/315 + (x-2)^9/945
    std::vector<double> c(10, 0.0);
    c[0] = -3.0;
    c[1] = 2.0;
    const std::map<int, double> shifted{{3, -4.0 / 3}, {5, 4.0 / 15}, {7, -8.0 / 315}, {9, 1.0 / 945}};
    for (const auto& [k, a] : shifted) {
        double binom = 1.0;
        for (int j = 0; j <= k; ++j) {
            c[j] += a * binom * std::pow(-2.0, k - j);
            binom = binom * (k - j) / (j + 1);
        }
    }
    return c;
}

double poly_eval(const std::vector<double>& c, double x) {
    double v = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) v = v * x + c[k];
    return v;
}

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

ProblemSpec inverse_fractional() {
    const std::vector<double> c = frac_poly();
    std::vector<double> dc(c.size() - 1);
    for (std::size_t k = 1; k < c.size(); ++k) dc[k - 1] = k * c[k];
    // I(x) = int_0^x t u'(t)^2 dt, a polynomial.
    std::vector<double> integrand = poly_mul(poly_mul(dc, dc), {0.0, 1.0});
    std::vector<double> I(integrand.size() + 1, 0.0);
    for (std::size_t k = 0; k < integrand.size(); ++k) I[k + 1] = integrand[k] / (k + 1);
    auto kappa_true = [](double x) { return 1.0 / (1.0 + x); };
    auto source = [c, I, kappa_true](double x) {
        double caputo = 0.0;
        for (std::size_t m = 1; m < c.size(); ++m)
            caputo += c[m] * std::tgamma(m + 1.0) / std::tgamma(m + 0.5) * std::pow(x, m - 0.5);
        return caputo - kappa_true(x) * poly_eval(I, x);
    };

    ProblemSpec s;
    s.id = "inv-frac";
    s.title = "Fractional Volterra IDE with unknown kappa(x)";
    s.domain = {{0.0, 4.0}};
    s.n = 100;
    s.unknowns = {{"u", m1([c](const T& x) {
                       T v = konst(x, c.back());
                       for (std::size_t k = c.size() - 1; k-- > 0;) v = v * x + c[k];
                       return v;
                   })}};
    OperatorTerm t = volterra([](double, double tt) { return tt; });
    t.zeta_on_derivative = true;
    t.zeta2 = [](const T&, const T& du) { return ad::square(du); };
    s.terms = {t};
    Equation eq;
    eq.derivative = Derivative::fractional(0.5);
    eq.source = [source](const T& X) {
        Mat v(X.rows(), 1);
        for (Eigen::Index i = 0; i < X.rows(); ++i) v(i, 0) = source(X.value()(i, 0));
        return ad::constant(v);
    };
    eq.terms = {{0, 1.0, 0}};
    s.equations = {eq};
    s.params = {{"kappa", true, 0.0, kNaN, kappa_true}};

    // 50 noisy observations, fixed draw independent of the training seed.
    std::mt19937_64 gen(2024);
    Mat pts(50, 1);
    Eigen::VectorXd vals(50);
    for (int i = 0; i < 50; ++i) {
        const double x = 4.0 * quadrature::uniform01(gen);
        const double u1 = quadrature::uniform01(gen), u2 = quadrature::uniform01(gen);
        const double z = std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * pi * u2);
        const double u = poly_eval(c, x);
        pts(i, 0) = x;
        vals[i] = u + 0.08 * std::abs(u) * z;
    }
    Condition data;
    data.kind = "data";
    data.points = pts;
    data.values = vals;
    s.conditions = {data};
    s.schedule.adam_epochs = 1000;
    s.schedule.adam_lr = 1e-2;
    s.schedule.lbfgs_epochs = 100;
    s.schedule.lbfgs_lr = 0.1;
    s.residual_tol = 5e-2;  // L1 discretization of the Caputo term, not quadrature
    return s;
}

std::vector<ProblemSpec> inverse() {
    std::vector<ProblemSpec> v;
    const double c5 = 3.0 * e * e / 8.0 + 5.0 / 8.0;  // int_0^1 e^{2t} (t^3 + t) dt
    v.push_back(inverse_scalar("inv-ex5", "Fredholm with unknown kappa", m1([](const T& x) { return x * x * x + x; }),
                               m1([c5](const T& x) { return x * x * x + x - 0.5 * c5; }),
                               fredholm([](double, double t) { return std::exp(2.0 * t); }), 0.5));
    v.push_back(inverse_scalar(
        "inv-ex6", "Volterra with unknown kappa", m1([](const T& x) { return ad::cos(x); }),
        m1([](const T& x) {
            return ad::cos(x) - 0.5 * ((x * x - 2.0) * ad::sin(x) + 2.0 * x * ad::cos(x));
        }),
        volterra([](double, double t) { return t * t; }), 0.5));
    v.push_back(inverse_fractional());
    return v;
}

ProblemSpec demo() {
    ProblemSpec s = scalar_ie("demo-vide", "Volterra IDE u' + u = int e^{t-x} u", {0.0, 5.0}, 1,
                              m1([](const T& x) { return 0.5 * (1.0 + ad::exp(-2.0 * x)); }),
                              m1([](const T& x) { return konst(x, 0.0); }),
                              {volterra([](double x, double t) { return std::exp(t - x); })});
    s.n = 10;
    s.equations[0].derivative = Derivative::ordinal(1);
    s.equations[0].u_coef = 1.0;
    s.conditions = {condition(s.unknowns[0].exact, 0, points1({0.0}), "ic")};
    s.schedule = lbfgs(30);
    return s;
}

// Table of the reported maxima: x_max for alpha = 1 and alpha = 0.5.
const std::map<int, std::pair<double, double>> kPopulationXmax{
    {1, {0.4745475, 0.1505151}}, {2, {0.8210821, 0.3030303}}, {3, {1.1191119, 0.4845485}},
    {4, {1.3846385, 0.6625663}}, {5, {1.6246625, 0.8500850}}, {6, {1.8466847, 1.0031004}},
    {7, {2.0507052, 1.1596160}}};

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

ProblemSpec population_spec(double kappa, double alpha) {
    const int key = static_cast<int>(std::lround(kappa * 10));
    auto it = kPopulationXmax.find(key);
    if (it == kPopulationXmax.end() || std::abs(kappa - key / 10.0) > 1e-12 || (alpha != 1.0 && alpha != 0.5))
        throw std::invalid_argument("population_spec: kappa in {0.1..0.7} and alpha in {1, 0.5}");
    const double xmax = alpha == 1.0 ? it->second.first : it->second.second;
    ProblemSpec s;
    s.id = "pop-k" + fmt(kappa) + "-a" + fmt(alpha);
    s.title = "Volterra population model";
    s.domain = {{0.0, xmax + 1.0}};
    s.n = 100;
    s.unknowns = {{"u", {}}};
    s.terms = {volterra([](double, double) { return 1.0; })};
    s.residual = [kappa, alpha](Fields& f) {
        Tensor u = f.u(0);
        Tensor D = alpha == 1.0 ? f.d(0, 0, 1) : f.caputo(0, alpha);
        // Classical sign: the population is damped by its accumulated toxins.
        return std::vector<Tensor>{kappa * D - (u - ad::square(u) - u * f.term(0))};
    };
    Condition ic;
    ic.points = points1({0.0});
    ic.values = Eigen::VectorXd::Constant(1, 0.1);
    s.conditions = {ic};
    s.schedule.adam_epochs = 1000;
    s.schedule.adam_lr = 1e-2;
    s.schedule.lbfgs_epochs = 100;
    s.schedule.lbfgs_lr = 0.1;
    s.post = [kappa, alpha](Session& session, Metrics& m) {
        const double b = session.spec().domain[0].b;
        Mat G(2000, 1);
        for (int i = 0; i < 2000; ++i) G(i, 0) = b * i / 1999.0;
        const Mat u = session.nets()[0].predict(G);
        Eigen::Index arg = 0;
        u.col(0).maxCoeff(&arg);
        m.emplace_back("u_max", u(arg, 0));
        m.emplace_back("x_max", G(arg, 0));
        if (alpha == 1.0) m.emplace_back("u_max_ref", 1.0 + kappa * std::log(kappa / (1.0 + kappa - 0.1)));
    };
    return s;
}

std::vector<ProblemSpec> forward_suites() {
    std::vector<ProblemSpec> all;
    for (auto&& group : {table3(), table4(), table5(), table7(), table8(), hyper(), inverse()})
        for (auto& s : group) all.push_back(s);
    all.push_back(demo());
    for (double a : {1.0, 0.5})
        for (int k = 1; k <= 7; ++k) all.push_back(population_spec(k / 10.0, a));
    return all;
}

const std::vector<ProblemSpec>& suite_registry() {
    static const std::vector<ProblemSpec> reg = [] {
        std::vector<ProblemSpec> all = forward_suites();
        for (auto& s : control_suites()) all.push_back(s);
        return all;
    }();
    return reg;
}

const ProblemSpec& find_suite(const std::string& id) {
    for (const auto& s : suite_registry())
        if (s.id == id) return s;
    throw std::out_of_range("unknown suite '" + id + "'");
}

}  // namespace qpinn
