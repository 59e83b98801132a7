#pragma once

#include <vector>

namespace nemhom {

// Gauss-Legendre rule of order n on [-1, 1]. Nodes are the roots of the
// Legendre polynomial P_n, found by Newton iteration from the Chebyshev-like
// initial guess; exact for polynomials of degree <= 2n-1.
struct GaussLegendre {
    explicit GaussLegendre(int n);
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Cached rules, keyed by order (quadrature orders are reused heavily).
const GaussLegendre& gauss_legendre(int n);

// Nodes/weights mapped to [a, b].
struct MappedRule {
    std::vector<double> x;
    std::vector<double> w;
};
MappedRule mapped_rule(int n, double a, double b);

} // namespace nemhom
