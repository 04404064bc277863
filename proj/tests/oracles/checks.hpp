#pragma once
// Property checks shared by the unit tests and the acceptance runner.

#include <cstdint>
#include <string>
#include <vector>

#include "qpinn/quadrature.hpp"

namespace checks {

std::vector<qpinn::quadrature::Family> table_families();

// Largest |Q(x^k) - m_k| / scale over families, n = 1..n_max, k <= 2n-1.
double exactness_violation(int n_max, std::string* worst = nullptr);

// Largest relative deviation between an assembled operator and the naive loop
// oracle over random cases. kind: fredholm, volterra, fredholm2d, volterra2d, fredholm3d.
double operator_oracle_deviation(const std::string& kind, int cases, std::uint64_t seed);

struct CaputoOrder {
    double alpha;
    std::vector<double> errors;  // h = 1/16 .. 1/256
    std::vector<double> orders;
    bool positive;               // sign of the L1 value matches the closed form
};
CaputoOrder caputo_convergence(double alpha);

}  // namespace checks
