#include "kvn/initial_density.hpp"

#include <cmath>
#include <numbers>

#include "kvn/error.hpp"

namespace kvn {

namespace {

double normal_pdf(double x, double mean, double sigma)
{
    const double z = (x - mean) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

double InitialDensity::operator()(const PhasePoint& x) const
{
    if (const auto* mix = std::get_if<GaussianMixtureDensity>(&spec)) {
        double sum = 0.0;
        for (const auto& c : mix->components) {
            sum += c.weight * normal_pdf(x.q, c.q0, c.sigma_q) * normal_pdf(x.p, c.p0, c.sigma_p);
        }
        return sum;
    }
    const auto& u = std::get<PerturbedUniformDensity>(spec);
    return (1.0 + u.alpha * std::cos(u.k * (x.q - u.q_lower))) / u.length * normal_pdf(x.p, 0.0, u.sigma_p);
}

double InitialDensity::mass() const
{
    if (const auto* mix = std::get_if<GaussianMixtureDensity>(&spec)) {
        double sum = 0.0;
        for (const auto& c : mix->components) sum += c.weight;
        return sum;
    }
    return 1.0;
}

std::string InitialDensity::name() const
{
    return std::holds_alternative<GaussianMixtureDensity>(spec) ? "gaussian_mixture" : "perturbed_uniform";
}

void InitialDensity::validate() const
{
    if (const auto* mix = std::get_if<GaussianMixtureDensity>(&spec)) {
        if (mix->components.empty()) throw validation_error("gaussian mixture needs at least one component");
        for (const auto& c : mix->components) {
            if (!(c.weight > 0.0) || !std::isfinite(c.weight)) throw validation_error("mixture weights must be > 0");
            if (!(c.sigma_q > 0.0) || !(c.sigma_p > 0.0)) throw validation_error("mixture widths must be > 0");
            if (!std::isfinite(c.q0) || !std::isfinite(c.p0)) throw validation_error("mixture centres must be finite");
        }
        return;
    }
    const auto& u = std::get<PerturbedUniformDensity>(spec);
    if (!(u.length > 0.0)) throw validation_error("perturbed uniform density needs length > 0");
    if (!(std::abs(u.alpha) <= 1.0)) throw validation_error("perturbed uniform density needs |alpha| <= 1");
    if (!(u.sigma_p > 0.0)) throw validation_error("perturbed uniform density needs sigma_p > 0");
    const double turns = u.k * u.length / (2.0 * std::numbers::pi);
    if (std::abs(turns - std::round(turns)) > 1e-9) {
        throw validation_error("perturbed uniform density needs k * length to be a multiple of 2 pi");
    }
}

DensityFunction InitialDensity::as_function() const
{
    return [self = *this](const PhasePoint& x) { return self(x); };
}

InitialDensity gaussian_density(double sigma_q, double sigma_p, double q0, double p0)
{
    return InitialDensity{GaussianMixtureDensity{{GaussianComponent{1.0, q0, p0, sigma_q, sigma_p}}}};
}

}  // namespace kvn
