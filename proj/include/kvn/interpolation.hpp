#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kvn {

enum class Interpolation { cubic_spline, linear };

/// Periodic 1-D interpolation on a uniform grid of n nodes. `shift` is in
/// units of the node spacing; out[i] = f(i - shift).
///
/// For a constant shift both schemes preserve sum(f) up to roundoff: the
/// spline prefilter and the B-spline weights each sum to one.
class PeriodicShifter {
public:
    PeriodicShifter(std::size_t n, Interpolation kind);

    void shift(std::span<const double> in, double shift, std::span<double> out);

    std::size_t size() const { return n_; }

private:
    void prefilter(std::span<const double> in);

    std::size_t n_;
    Interpolation kind_;
    // Cyclic tridiagonal (1, 4, 1)/6 factorisation.
    std::vector<double> c_prime_;
    std::vector<double> z_;
    std::vector<double> coeffs_;
    std::vector<double> work_;
    double z_dot_factor_ = 0.0;
};

}  // namespace kvn
