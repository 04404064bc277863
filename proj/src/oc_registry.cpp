#include <cmath>
#include <numbers>

#include "qpinn/problems.hpp"

namespace qpinn {

namespace {

using T = Tensor;
using ad::Mat;
using std::numbers::e;
using std::numbers::pi;

Model m1(std::function<T(const T&)> f) {
    return [f](const T& X) { return f(col(X, 0)); };
}
Model m2(std::function<T(const T&, const T&)> f) {
    return [f](const T& X) { return f(col(X, 0), col(X, 1)); };
}

Condition pin(int unknown, Mat pts, Eigen::VectorXd values, const std::string& kind = "ic") {
    Condition c;
    c.kind = kind;
    c.unknown = unknown;
    c.points = std::move(pts);
    c.values = std::move(values);
    return c;
}

Condition pin1(int unknown, double t, double value) {
    return pin(unknown, Mat::Constant(1, 1, t), Eigen::VectorXd::Constant(1, value));
}

opt::Schedule schedule(int adam, int lbfgs) {
    opt::Schedule s;
    s.adam_epochs = adam;
    s.adam_lr = 1e-2;
    s.lbfgs_epochs = lbfgs;
    s.lbfgs_lr = 0.1;
    return s;
}

ProblemSpec base(const std::string& id, const std::string& title, int n, double gamma) {
    ProblemSpec s;
    s.id = id;
    s.title = title;
    s.domain = {{0.0, 1.0}};
    s.n = n;
    s.control = OptimalControlSpec{};
    s.control->gamma = gamma;
    s.schedule = schedule(500, 100);
    return s;
}

ProblemSpec ex1() {
    ProblemSpec s = base("oc-ex1", "Linear state, quadratic cost, two-point conditions", 100, 1e3);
    const double c = e / (2.0 * e * e - 2.0);
    s.unknowns = {{"chi", m1([c](const T& t) { return c * (ad::exp(t) - ad::exp(-t)); })},
                  {"u", m1([c](const T& t) { return c * (ad::exp(t) + ad::exp(-t)); })}};
    s.residual = [](Fields& f) { return std::vector<T>{f.d(0, 0, 1) - f.u(1)}; };
    s.conditions = {pin1(0, 0.0, 0.0), pin1(0, 1.0, 0.5)};
    s.conditions[1].kind = "bc";
    s.control->running_cost = [](Fields& f) { return ad::square(f.u(1)) + ad::square(f.u(0)); };
    s.control->j_reference = 0.328259;
    return s;
}

ProblemSpec ex2() {
    ProblemSpec s = base("oc-ex2", "Linear state with damping", 100, 1e3);
    const double r = std::sqrt(2.0);
    const double k = (2.0 * r - 3.0) / (-std::exp(2.0 * r) + 2.0 * r - 3.0);
    s.unknowns = {{"chi", m1([=](const T& t) { return k * ad::exp(r * t) + (1.0 - k) * ad::exp(-r * t); })},
                  {"u", m1([=](const T& t) {
                       return k * (r + 1.0) * ad::exp(r * t) - (1.0 - k) * (r - 1.0) * ad::exp(-r * t);
                   })}};
    s.residual = [](Fields& f) { return std::vector<T>{f.d(0, 0, 1) - f.u(1) + f.u(0)}; };
    s.conditions = {pin1(0, 0.0, 1.0)};
    s.control->running_cost = [](Fields& f) { return 0.5 * (ad::square(f.u(1)) + ad::square(f.u(0))); };
    s.control->j_reference = 0.192909;
    return s;
}

ProblemSpec ex3() {
    ProblemSpec s = base("oc-ex3", "Fractional constraints of order one half", 2000, 10.0);
    const double sp = std::sqrt(pi);
    s.unknowns = {{"chi1", m1([](const T& t) { return 1.0 + ad::pow(t, 1.5); })},
                  {"chi2", m1([](const T& t) { return ad::pow(t, 2.5); })},
                  {"u", m1([sp](const T& t) { return 0.75 * sp * t - ad::pow(t, 2.5); })}};
    s.residual = [sp](Fields& f) {
        const T t = f.x();
        T r1 = f.caputo(0, 0.5) - f.u(1) - f.u(2);
        T r2 = f.caputo(1, 0.5) - f.u(0) - 15.0 * sp / 16.0 * ad::square(t) + ad::pow(t, 1.5) + 1.0;
        return std::vector<T>{r1, r2};
    };
    s.conditions = {pin1(0, 0.0, 1.0), pin1(1, 0.0, 0.0)};
    s.control->running_cost = [sp](Fields& f) {
        const T t = f.x();
        return ad::square(f.u(0) - 1.0 - ad::pow(t, 1.5)) + ad::square(f.u(1) - ad::pow(t, 2.5)) +
               ad::square(f.u(2) - 0.75 * sp * t + ad::pow(t, 2.5));
    };
    s.control->j_reference = 0.0;
    s.residual_tol = 1e-2;  // L1 scheme on t^{3/2}
    return s;
}

ProblemSpec ex5() {
    ProblemSpec s = base("oc-ex5", "Quadratic cost with a cross term", 500, 1e4);
    const double c1 = std::cosh(1.0);
    s.unknowns = {{"chi", m1([c1](const T& t) { return 0.5 * (ad::exp(1.0 - t) + ad::exp(t - 1.0)) / c1; })},
                  {"u", m1([c1](const T& t) {
                       const T ep = ad::exp(1.0 - t), em = ad::exp(t - 1.0);
                       // -(tanh + 1/2) cosh = -(sinh + cosh/2)
                       return -(0.5 * (ep - em) + 0.25 * (ep + em)) / c1;
                   })}};
    s.residual = [](Fields& f) { return std::vector<T>{f.d(0, 0, 1) - 0.5 * f.u(0) - f.u(1)}; };
    s.conditions = {pin1(0, 0.0, 1.0)};
    s.control->running_cost = [](Fields& f) {
        const T x = f.u(0), u = f.u(1);
        return 0.5 * (ad::square(u) + 1.25 * ad::square(x) + x * u);
    };
    s.control->j_reference = 0.380797077;
    return s;
}

ProblemSpec ex6() {
    ProblemSpec s = base("oc-ex6", "Volterra integro-differential constraint", 100, 1e3);
    s.unknowns = {{"chi", m1([](const T& t) { return ad::exp(ad::square(t)); })},
                  {"u", m1([](const T& t) { return 2.0 * t + 1.0; })}};
    OperatorTerm v;
    v.kind = TermKind::volterra;
    v.k1 = [](double t, double r) { return t * (2.0 * t + 1.0) * std::exp(r * (t - r)); };
    s.terms = {v};
    s.residual = [](Fields& f) { return std::vector<T>{f.d(0, 0, 1) - f.u(1) + f.u(0) - f.term(0)}; };
    s.conditions = {pin1(0, 0.0, 1.0)};
    s.control->running_cost = [](Fields& f) {
        const T t = f.x();
        return ad::square(f.u(0) - ad::exp(ad::square(t))) + ad::square(f.u(1) - 2.0 * t - 1.0);
    };
    s.control->j_reference = 0.0;
    return s;
}

ProblemSpec ex7() {
    ProblemSpec s = base("oc-ex7", "Two-dimensional parabolic constraint", 25, 1e2);
    s.domain = {{0.0, 1.0}, {0.0, 1.0}};
    s.unknowns = {{"chi", m2([](const T& r, const T& t) { return ad::pow(t, 4.0) * ad::sin(r); })},
                  {"u", m2([](const T& r, const T& t) { return t * t * t * ad::cos(r); })}};
    s.residual = [](Fields& f) {
        const T r = f.x(0), t = f.x(1);
        const T sr = ad::sin(r), s2 = ad::sin(2.0 * r), t3 = t * t * t;
        const T chi = f.u(0);
        T res = f.d(0, 1, 1) - ad::cos(chi) - 2.0 * sr * f.d(0, 0, 1) - f.d(0, 0, 2) - 6.0 * sr * f.u(1) +
                ad::cos(ad::pow(t, 4.0) * sr) + t3 * (t * s2 - t * sr + 3.0 * s2) - 4.0 * sr * t3;
        return std::vector<T>{res};
    };
    Mat bottom(25, 2), left(25, 2);
    for (int i = 0; i < 25; ++i) {
        bottom(i, 0) = i / 24.0;
        bottom(i, 1) = 0.0;
        left(i, 0) = 0.0;
        left(i, 1) = i / 24.0;
    }
    s.conditions = {pin(0, bottom, Eigen::VectorXd::Zero(25)), pin(0, left, Eigen::VectorXd::Zero(25), "bc")};
    s.control->running_cost = [](Fields& f) {
        const T r = f.x(0), t = f.x(1);
        return ad::square(f.u(0) - ad::pow(t, 4.0) * ad::sin(r)) + ad::square(f.u(1) - t * t * t * ad::cos(r));
    };
    s.control->j_reference = 0.0;
    return s;
}

}  // namespace

ProblemSpec oc_delay_spec(double gamma) {
    ProblemSpec s = base("oc-ex4", "Delay constraint with constant history", 200, gamma);
    s.domain = {{0.0, 2.0}};
    s.unknowns = {{"chi", {}}, {"u", {}}};
    s.residual = [](Fields& f) { return std::vector<T>{f.d(0, 0, 1) - f.u(1) - f.delayed(0, 1.0)}; };
    s.conditions = {pin1(0, 0.0, 1.0)};
    s.control->running_cost = [](Fields& f) { return 0.5 * (ad::square(f.u(1)) + ad::square(f.u(0))); };
    s.control->history = [](double) { return 1.0; };
    s.control->history_domain = {-1.0, 0.0};
    s.control->j_reference = 1.647874;
    s.control->j_reference_soft = true;
    return s;
}

std::vector<ProblemSpec> control_suites() {
    return {ex1(), ex2(), ex3(), oc_delay_spec(750.0), ex5(), ex6(), ex7()};
}

}  // namespace qpinn
