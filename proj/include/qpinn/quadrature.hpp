#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qpinn::quadrature {

enum class FamilyKind {
    Legendre,
    Chebyshev1,
    Chebyshev2,
    Chebyshev3,
    Chebyshev4,
    Jacobi,
    Laguerre,
    Hermite
};

struct Family {
    FamilyKind kind = FamilyKind::Legendre;
    double alpha = 0.0;  // Jacobi alpha, Laguerre alpha
    double beta = 0.0;   // Jacobi beta

    static Family legendre() { return {FamilyKind::Legendre}; }
    static Family chebyshev1() { return {FamilyKind::Chebyshev1}; }
    static Family chebyshev2() { return {FamilyKind::Chebyshev2}; }
    static Family chebyshev3() { return {FamilyKind::Chebyshev3}; }
    static Family chebyshev4() { return {FamilyKind::Chebyshev4}; }
    static Family jacobi(double a, double b) { return {FamilyKind::Jacobi, a, b}; }
    static Family laguerre(double a = 0.0) { return {FamilyKind::Laguerre, a, 0.0}; }
    static Family hermite() { return {FamilyKind::Hermite}; }

    bool finite_domain() const;
    bool symmetric() const;
    // Weight function on the reference domain.
    double weight(double x) const;
    std::string name() const;
    void validate() const;
};

// Parses "legendre", "chebyshev1".."chebyshev4", "jacobi:a,b", "laguerre[:a]", "hermite".
Family parse_family(const std::string& text);

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PolyValue {
    double value;
    double derivative;
};

PolyValue legendre_eval(int n, double x);
PolyValue jacobi_eval(double alpha, double beta, int n, double x);
PolyValue laguerre_eval(double alpha, int n, double x);
PolyValue hermite_eval(int n, double x);

struct QuadratureRule {
    Family family;
    int n = 0;
    std::vector<double> nodes;
    std::vector<double> weights;
};

QuadratureRule make_rule(const Family& family, int n);

struct MappedRule {
    QuadratureRule base;
    double a = 0.0;
    double b = 0.0;
    std::vector<double> mapped_nodes;
    double scale = 0.0;

    int size() const { return base.n; }
    const std::vector<double>& weights() const { return base.weights; }
};

MappedRule map_rule(const QuadratureRule& rule, double a, double b);
// Shorthand for map_rule(make_rule(Family::legendre(), n), a, b).
MappedRule gauss_legendre(int n, double a, double b);

double integrate(const QuadratureRule& rule, std::span<const double> f_values);
double integrate(const MappedRule& rule, std::span<const double> f_values);

double trapezoid(std::span<const double> f_values, double a, double b);

// Uniform double in [0,1) from the top 53 bits of a 64-bit draw. Avoids the
// implementation-defined std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

double monte_carlo(const std::function<double(double)>& f, double a, double b,
                   std::size_t n_samples, std::uint64_t seed);

}  // namespace qpinn::quadrature
