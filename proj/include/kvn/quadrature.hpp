#pragma once

#include <cstddef>
#include <vector>

namespace kvn {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule mapped to [a, b].
QuadratureRule gauss_legendre(std::size_t n, double a, double b);

/// Composite trapezoid rule with n >= 2 equispaced nodes on [a, b].
QuadratureRule trapezoid(std::size_t n, double a, double b);

}  // namespace kvn
