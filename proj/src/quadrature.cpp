#include "kvn/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "kvn/error.hpp"

namespace kvn {

QuadratureRule gauss_legendre(std::size_t n, double a, double b)
{
    if (n < 1) throw validation_error("gauss-legendre needs at least one node");
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = 0.0;
            for (std::size_t k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / static_cast<double>(k);
            }
            dp = static_cast<double>(n) * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        // Recompute the derivative at the converged root.
        double p0 = 1.0;
        double p1 = 0.0;
        for (std::size_t k = 1; k <= n; ++k) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / static_cast<double>(k);
        }
        dp = static_cast<double>(n) * (x * p0 - p1) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = mid - half * x;
        rule.nodes[n - 1 - i] = mid + half * x;
        rule.weights[i] = half * w;
        rule.weights[n - 1 - i] = half * w;
    }
    return rule;
}

QuadratureRule trapezoid(std::size_t n, double a, double b)
{
    if (n < 2) throw validation_error("trapezoid rule needs at least two nodes");
    QuadratureRule rule;
    const double h = (b - a) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        rule.nodes.push_back(a + h * static_cast<double>(i));
        rule.weights.push_back((i == 0 || i + 1 == n) ? 0.5 * h : h);
    }
    return rule;
}

}  // namespace kvn
