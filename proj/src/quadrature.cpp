#include "qpinn/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qpinn::quadrature {

namespace {

constexpr int kMaxNewton = 100;
constexpr double kValueTol = 1e-13;
constexpr double kStepTol = 1e-14;

void check_parameter(double p, const char* what) {
    if (!(p > -1.0))
        throw std::invalid_argument(std::string(what) + " must be > -1");
}

double jacobi_value(double a, double b, int n, double x) {
    if (n == 0) return 1.0;
    double pm1 = 1.0;
    double p = (a + 1.0) + 0.5 * (a + b + 2.0) * (x - 1.0);
    for (int m = 2; m <= n; ++m) {
        const double c = 2.0 * m + a + b;
        const double num = (c - 1.0) * (c * (c - 2.0) * x + a * a - b * b) * p
                         - 2.0 * (m + a - 1.0) * (m + b - 1.0) * c * pm1;
        const double next = num / (2.0 * m * (m + a + b) * (c - 2.0));
        pm1 = p;
        p = next;
    }
    return p;
}

double laguerre_value(double a, int n, double x) {
    if (n == 0) return 1.0;
    double lm1 = 1.0;
    double l = 1.0 + a - x;
    for (int k = 1; k < n; ++k) {
        const double next = ((2.0 * k + 1.0 + a - x) * l - (k + a) * lm1) / (k + 1.0);
        lm1 = l;
        l = next;
    }
    return l;
}

// Orthonormal Hermite functions without the Gaussian factor; h_n and h_{n-1}.
std::pair<double, double> hermite_normalized(int n, double x) {
    double p1 = std::pow(std::numbers::pi, -0.25);
    double p2 = 0.0;
    for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = x * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
    }
    return {p1, p2};
}

// Newton iteration with deflation against already located roots.
template <class Eval>
double newton_root(Eval eval, double x, const std::vector<double>& found,
                   const Family& family, int n, int index) {
    for (int it = 0; it < kMaxNewton; ++it) {
        const PolyValue pv = eval(x);
        double defl = 0.0;
        for (double r : found) defl += 1.0 / (x - r);
        const double step = pv.value / (pv.derivative - pv.value * defl);
        x -= step;
        if (!std::isfinite(x)) break;
        if (std::abs(pv.value) < kValueTol || std::abs(step) <= kStepTol * std::max(1.0, std::abs(x)))
            return x;
    }
    std::ostringstream msg;
    msg << "Newton iteration did not converge: family " << family.name() << ", n=" << n
        << ", node " << index;
    throw QuadratureError(msg.str());
}

void symmetrize(QuadratureRule& rule) {
    const int n = rule.n;
    for (int i = 0; i < n / 2; ++i) {
        const int j = n - 1 - i;
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.weights[i] = w;
        rule.weights[j] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
}

void jacobi_nodes(QuadratureRule& rule, double a, double b) {
    const int n = rule.n;
    std::vector<double> x;
    x.reserve(n);
    auto eval = [&](double t) { return jacobi_eval(a, b, n, t); };
    for (int k = 0; k < n; ++k) {
        double r = -std::cos((2.0 * k + 1.0) * std::numbers::pi / (2.0 * n));
        if (k > 0) r = 0.5 * (r + x[k - 1]);
        x.push_back(newton_root(eval, r, x, rule.family, n, k));
    }
    std::sort(x.begin(), x.end());
    const double logc = std::lgamma(n + a + 1.0) + std::lgamma(n + b + 1.0)
                      - std::lgamma(n + a + b + 1.0) - std::lgamma(n + 1.0)
                      + (a + b + 1.0) * std::log(2.0);
    const double c = std::exp(logc);
    rule.nodes = x;
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        const double d = jacobi_eval(a, b, n, x[i]).derivative;
        rule.weights[i] = c / ((1.0 - x[i]) * (1.0 + x[i]) * d * d);
    }
}

void legendre_nodes(QuadratureRule& rule) {
    const int n = rule.n;
    std::vector<double> x;
    auto eval = [&](double t) { return legendre_eval(n, t); };
    for (int k = 0; k < n; ++k) {
        const double guess = std::cos(std::numbers::pi * (k + 0.75) / (n + 0.5));
        x.push_back(newton_root(eval, guess, x, rule.family, n, k));
    }
    std::sort(x.begin(), x.end());
    rule.nodes = x;
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        const double d = legendre_eval(n, x[i]).derivative;
        rule.weights[i] = 2.0 / ((1.0 - x[i]) * (1.0 + x[i]) * d * d);
    }
}

void laguerre_nodes(QuadratureRule& rule, double a) {
    const int n = rule.n;
    std::vector<double> x;
    auto eval = [&](double t) { return laguerre_eval(a, n, t); };
    double z = 0.0;
    for (int i = 1; i <= n; ++i) {
        if (i == 1) {
            z = (1.0 + a) * (3.0 + 0.92 * a) / (1.0 + 2.4 * n + 1.8 * a);
        } else if (i == 2) {
            z += (15.0 + 6.25 * a) / (1.0 + 0.9 * a + 2.5 * n);
        } else {
            const double ai = i - 2;
            z += ((1.0 + 2.55 * ai) / (1.9 * ai) + 1.26 * ai * a / (1.0 + 3.5 * ai))
                 * (z - x[i - 3]) / (1.0 + 0.3 * a);
        }
        z = newton_root(eval, z, x, rule.family, n, i - 1);
        x.push_back(z);
    }
    std::sort(x.begin(), x.end());
    const double logc = std::lgamma(n + a + 1.0) - std::lgamma(n + 1.0);
    rule.nodes = x;
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        const double d = laguerre_eval(a, n, x[i]).derivative;
        rule.weights[i] = std::exp(logc - std::log(x[i]) - 2.0 * std::log(std::abs(d)));
    }
}

void hermite_nodes(QuadratureRule& rule) {
    const int n = rule.n;
    const int m = (n + 1) / 2;
    auto eval = [&](double t) {
        auto [h, hm1] = hermite_normalized(n, t);
        return PolyValue{h, std::sqrt(2.0 * n) * hm1};
    };
    std::vector<double> pos;
    double z = 0.0;
    for (int i = 1; i <= m; ++i) {
        if (i == 1)
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        else if (i == 2)
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        else if (i == 3)
            z = 1.86 * z - 0.86 * pos[0];
        else if (i == 4)
            z = 1.91 * z - 0.91 * pos[1];
        else
            z = 2.0 * z - pos[i - 3];
        // deflate against the mirrored roots too so the odd middle root stays put
        std::vector<double> found = pos;
        for (double r : pos) found.push_back(-r);
        z = newton_root(eval, z, found, rule.family, n, i - 1);
        pos.push_back(z);
    }
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    for (int i = 0; i < m; ++i) {
        double xi = pos[i];
        if (n % 2 == 1 && i == m - 1) xi = 0.0;
        const double hm1 = hermite_normalized(n, xi).second;
        const double w = 1.0 / (n * hm1 * hm1);
        rule.nodes[n - 1 - i] = xi;
        rule.nodes[i] = -xi;
        rule.weights[n - 1 - i] = w;
        rule.weights[i] = w;
    }
}

void chebyshev_nodes(QuadratureRule& rule) {
    const int n = rule.n;
    const double pi = std::numbers::pi;
    std::vector<std::pair<double, double>> xw(n);
    for (int i = 1; i <= n; ++i) {
        double theta = 0.0, w = 0.0;
        switch (rule.family.kind) {
            case FamilyKind::Chebyshev1:
                theta = (2.0 * i - 1.0) * pi / (2.0 * n);
                w = pi / n;
                break;
            case FamilyKind::Chebyshev2: {
                theta = i * pi / (n + 1.0);
                const double s = std::sin(theta);
                w = pi / (n + 1.0) * s * s;
                break;
            }
            case FamilyKind::Chebyshev3:
                theta = (2.0 * i - 1.0) * pi / (2.0 * n + 1.0);
                w = 2.0 * pi / (2.0 * n + 1.0) * (1.0 + std::cos(theta));
                break;
            case FamilyKind::Chebyshev4:
                theta = 2.0 * i * pi / (2.0 * n + 1.0);
                w = 2.0 * pi / (2.0 * n + 1.0) * (1.0 - std::cos(theta));
                break;
            default:
                break;
        }
        xw[i - 1] = {std::cos(theta), w};
    }
    std::sort(xw.begin(), xw.end());
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = xw[i].first;
        rule.weights[i] = xw[i].second;
    }
}

}  // namespace

bool Family::finite_domain() const {
    return kind != FamilyKind::Laguerre && kind != FamilyKind::Hermite;
}

bool Family::symmetric() const {
    switch (kind) {
        case FamilyKind::Legendre:
        case FamilyKind::Chebyshev1:
        case FamilyKind::Chebyshev2:
        case FamilyKind::Hermite:
            return true;
        case FamilyKind::Jacobi:
            return alpha == beta;
        default:
            return false;
    }
}

double Family::weight(double x) const {
    switch (kind) {
        case FamilyKind::Legendre: return 1.0;
        case FamilyKind::Chebyshev1: return 1.0 / std::sqrt((1.0 - x) * (1.0 + x));
        case FamilyKind::Chebyshev2: return std::sqrt((1.0 - x) * (1.0 + x));
        case FamilyKind::Chebyshev3: return std::sqrt((1.0 + x) / (1.0 - x));
        case FamilyKind::Chebyshev4: return std::sqrt((1.0 - x) / (1.0 + x));
        case FamilyKind::Jacobi: return std::pow(1.0 - x, alpha) * std::pow(1.0 + x, beta);
        case FamilyKind::Laguerre: return std::pow(x, alpha) * std::exp(-x);
        case FamilyKind::Hermite: return std::exp(-x * x);
    }
    return 1.0;
}

std::string Family::name() const {
    std::ostringstream os;
    switch (kind) {
        case FamilyKind::Legendre: return "legendre";
        case FamilyKind::Chebyshev1: return "chebyshev1";
        case FamilyKind::Chebyshev2: return "chebyshev2";
        case FamilyKind::Chebyshev3: return "chebyshev3";
        case FamilyKind::Chebyshev4: return "chebyshev4";
        case FamilyKind::Jacobi: os << "jacobi:" << alpha << "," << beta; return os.str();
        case FamilyKind::Laguerre: os << "laguerre:" << alpha; return os.str();
        case FamilyKind::Hermite: return "hermite";
    }
    return "?";
}

void Family::validate() const {
    if (kind == FamilyKind::Jacobi) {
        check_parameter(alpha, "Jacobi alpha");
        check_parameter(beta, "Jacobi beta");
    } else if (kind == FamilyKind::Laguerre) {
        check_parameter(alpha, "Laguerre alpha");
    }
}

Family parse_family(const std::string& text) {
    auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string tail = colon == std::string::npos ? "" : text.substr(colon + 1);
    Family f;
    if (head == "legendre") f = Family::legendre();
    else if (head == "chebyshev1") f = Family::chebyshev1();
    else if (head == "chebyshev2") f = Family::chebyshev2();
    else if (head == "chebyshev3") f = Family::chebyshev3();
    else if (head == "chebyshev4") f = Family::chebyshev4();
    else if (head == "hermite") f = Family::hermite();
    else if (head == "laguerre") f = Family::laguerre(tail.empty() ? 0.0 : std::stod(tail));
    else if (head == "jacobi") {
        auto comma = tail.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("jacobi family needs 'jacobi:alpha,beta'");
        f = Family::jacobi(std::stod(tail.substr(0, comma)), std::stod(tail.substr(comma + 1)));
    } else {
        throw std::invalid_argument("unknown quadrature family '" + text + "'");
    }
    f.validate();
    return f;
}

PolyValue legendre_eval(int n, double x) {
    if (n < 0) throw std::invalid_argument("legendre_eval: n must be >= 0");
    if (n == 0) return {1.0, 0.0};
    double pm1 = 1.0, p = x;
    double dm1 = 0.0, d = 1.0;
    for (int k = 1; k < n; ++k) {
        const double pn = ((2.0 * k + 1.0) * x * p - k * pm1) / (k + 1.0);
        const double dn = dm1 + (2.0 * k + 1.0) * p;
        pm1 = p;
        p = pn;
        dm1 = d;
        d = dn;
    }
    return {p, d};
}

PolyValue jacobi_eval(double alpha, double beta, int n, double x) {
    check_parameter(alpha, "jacobi_eval alpha");
    check_parameter(beta, "jacobi_eval beta");
    if (n < 0) throw std::invalid_argument("jacobi_eval: n must be >= 0");
    if (n == 0) return {1.0, 0.0};
    return {jacobi_value(alpha, beta, n, x),
            0.5 * (n + alpha + beta + 1.0) * jacobi_value(alpha + 1.0, beta + 1.0, n - 1, x)};
}

PolyValue laguerre_eval(double alpha, int n, double x) {
    check_parameter(alpha, "laguerre_eval alpha");
    if (n < 0) throw std::invalid_argument("laguerre_eval: n must be >= 0");
    if (n == 0) return {1.0, 0.0};
    return {laguerre_value(alpha, n, x), -laguerre_value(alpha + 1.0, n - 1, x)};
}

PolyValue hermite_eval(int n, double x) {
    if (n < 0) throw std::invalid_argument("hermite_eval: n must be >= 0");
    if (n == 0) return {1.0, 0.0};
    double hm1 = 1.0, h = 2.0 * x;
    for (int k = 1; k < n; ++k) {
        const double next = 2.0 * x * h - 2.0 * k * hm1;
        hm1 = h;
        h = next;
    }
    return {h, 2.0 * n * hm1};
}

QuadratureRule make_rule(const Family& family, int n) {
    if (n < 1) throw std::invalid_argument("make_rule: n must be >= 1");
    family.validate();
    QuadratureRule rule{family, n, {}, {}};
    switch (family.kind) {
        case FamilyKind::Legendre: legendre_nodes(rule); break;
        case FamilyKind::Chebyshev1:
        case FamilyKind::Chebyshev2:
        case FamilyKind::Chebyshev3:
        case FamilyKind::Chebyshev4: chebyshev_nodes(rule); break;
        case FamilyKind::Jacobi: jacobi_nodes(rule, family.alpha, family.beta); break;
        case FamilyKind::Laguerre: laguerre_nodes(rule, family.alpha); break;
        case FamilyKind::Hermite: hermite_nodes(rule); break;
    }
    if (family.symmetric()) symmetrize(rule);
    return rule;
}

MappedRule map_rule(const QuadratureRule& rule, double a, double b) {
    if (!rule.family.finite_domain())
        throw std::invalid_argument("map_rule: " + rule.family.name() +
                                    " rules live on an unbounded domain and cannot be mapped");
    if (!std::isfinite(a) || !std::isfinite(b) || !(a < b))
        throw std::invalid_argument("map_rule: need finite a < b");
    MappedRule m{rule, a, b, {}, 0.5 * (b - a)};
    const double mid = 0.5 * (a + b);
    m.mapped_nodes.resize(rule.n);
    for (int i = 0; i < rule.n; ++i)
        m.mapped_nodes[i] = std::clamp(m.scale * rule.nodes[i] + mid, a, b);
    return m;
}

MappedRule gauss_legendre(int n, double a, double b) {
    return map_rule(make_rule(Family::legendre(), n), a, b);
}

double integrate(const QuadratureRule& rule, std::span<const double> f_values) {
    if (f_values.size() != static_cast<std::size_t>(rule.n))
        throw std::invalid_argument("integrate: expected " + std::to_string(rule.n) + " values, got " +
                                    std::to_string(f_values.size()));
    double s = 0.0;
    for (int i = 0; i < rule.n; ++i) s += rule.weights[i] * f_values[i];
    return s;
}

double integrate(const MappedRule& rule, std::span<const double> f_values) {
    return rule.scale * integrate(rule.base, f_values);
}

double trapezoid(std::span<const double> f_values, double a, double b) {
    if (f_values.size() < 2) throw std::invalid_argument("trapezoid: need at least 2 samples");
    const double delta = (b - a) / static_cast<double>(f_values.size() - 1);
    double s = 0.0;
    for (std::size_t i = 1; i < f_values.size(); ++i) s += f_values[i] + f_values[i - 1];
    return 0.5 * delta * s;
}

double monte_carlo(const std::function<double(double)>& f, double a, double b,
                   std::size_t n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("monte_carlo: n_samples must be >= 1");
    if (!std::isfinite(a) || !std::isfinite(b) || !(a < b))
        throw std::invalid_argument("monte_carlo: need finite a < b");
    std::mt19937_64 gen(seed);
    double s = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) s += f(a + (b - a) * uniform01(gen));
    return (b - a) / static_cast<double>(n_samples) * s;
}

}  // namespace qpinn::quadrature
