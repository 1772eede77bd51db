#pragma once

#include <string>
#include <variant>
#include <vector>

#include "kvn/phase_space.hpp"

namespace kvn {

/// One product-gaussian component of a mixture.
struct GaussianComponent {
    double weight = 1.0;
    double q0 = 0.0;
    double p0 = 0.0;
    double sigma_q = 1.0;
    double sigma_p = 1.0;
};

/// sum_k w_k N(q; q0_k, sigma_q_k) N(p; p0_k, sigma_p_k)
struct GaussianMixtureDensity {
    std::vector<GaussianComponent> components;
};

/// (1 + alpha cos(k q)) / L * N(p; 0, sigma_p) on a periodic q cell of length L.
/// Periodicity requires k L to be a multiple of 2 pi.
struct PerturbedUniformDensity {
    double q_lower = 0.0;
    double length = 1.0;
    double alpha = 0.0;
    double k = 1.0;
    double sigma_p = 1.0;
};

using InitialDensitySpec = std::variant<GaussianMixtureDensity, PerturbedUniformDensity>;

/// An analytic initial density together with its exact total mass.
struct InitialDensity {
    InitialDensitySpec spec;

    double operator()(const PhasePoint& x) const;
    double mass() const;
    std::string name() const;
    void validate() const;

    DensityFunction as_function() const;
};

InitialDensity gaussian_density(double sigma_q = 1.0, double sigma_p = 1.0, double q0 = 0.0, double p0 = 0.0);

}  // namespace kvn
