#include "kvn/interpolation.hpp"

#include <cmath>

#include "kvn/error.hpp"

namespace kvn {

namespace {

std::size_t wrap_index(long long i, std::size_t n)
{
    const long long m = static_cast<long long>(n);
    long long r = i % m;
    if (r < 0) r += m;
    return static_cast<std::size_t>(r);
}

}  // namespace

PeriodicShifter::PeriodicShifter(std::size_t n, Interpolation kind)
    : n_(n), kind_(kind), c_prime_(n), z_(n), coeffs_(n), work_(n)
{
    if (n < 4) throw validation_error("periodic interpolation needs at least 4 nodes");
    if (kind_ != Interpolation::cubic_spline) return;

    // Sherman-Morrison split of the cyclic (1 4 1) matrix: A = B + u v^T with
    // u = (gamma, 0, ..., 0, 1), v = (1, 0, ..., 0, 1/gamma).
    const double gamma = -4.0;
    std::vector<double> diag(n, 4.0);
    diag[0] = 4.0 - gamma;
    diag[n - 1] = 4.0 - 1.0 / gamma;

    // Thomas factorisation; c_prime_ holds 1 / pivot.
    c_prime_[0] = 1.0 / diag[0];
    for (std::size_t i = 1; i < n; ++i) c_prime_[i] = 1.0 / (diag[i] - c_prime_[i - 1]);

    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = 1.0;
    z_[0] = u[0] * c_prime_[0];
    for (std::size_t i = 1; i < n; ++i) z_[i] = (u[i] - z_[i - 1]) * c_prime_[i];
    for (std::size_t i = n - 1; i-- > 0;) z_[i] -= c_prime_[i] * z_[i + 1];
    z_dot_factor_ = 1.0 + z_[0] + z_[n - 1] / gamma;
}

void PeriodicShifter::prefilter(std::span<const double> in)
{
    // Solve (c_{i-1} + 4 c_i + c_{i+1}) / 6 = f_i.
    const std::size_t n = n_;
    auto& y = coeffs_;
    y[0] = 6.0 * in[0] * c_prime_[0];
    for (std::size_t i = 1; i < n; ++i) y[i] = (6.0 * in[i] - y[i - 1]) * c_prime_[i];
    for (std::size_t i = n - 1; i-- > 0;) y[i] -= c_prime_[i] * y[i + 1];
    const double gamma = -4.0;
    const double factor = (y[0] + y[n - 1] / gamma) / z_dot_factor_;
    for (std::size_t i = 0; i < n; ++i) y[i] -= factor * z_[i];
}

void PeriodicShifter::shift(std::span<const double> in, double shift, std::span<double> out)
{
    if (in.size() != n_ || out.size() != n_) throw validation_error("interpolation row has the wrong length");
    const double offset = -shift;
    const double base = std::floor(offset);
    const double t = offset - base;
    const long long j0 = static_cast<long long>(base);

    if (kind_ == Interpolation::linear) {
        for (std::size_t i = 0; i < n_; ++i) {
            const long long j = static_cast<long long>(i) + j0;
            work_[i] = (1.0 - t) * in[wrap_index(j, n_)] + t * in[wrap_index(j + 1, n_)];
        }
        for (std::size_t i = 0; i < n_; ++i) out[i] = work_[i];
        return;
    }

    prefilter(in);
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double w0 = (1.0 - t) * (1.0 - t) * (1.0 - t) / 6.0;
    const double w1 = (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0;
    const double w2 = (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0;
    const double w3 = t3 / 6.0;
    for (std::size_t i = 0; i < n_; ++i) {
        const long long j = static_cast<long long>(i) + j0;
        out[i] = w0 * coeffs_[wrap_index(j - 1, n_)] + w1 * coeffs_[wrap_index(j, n_)] +
                 w2 * coeffs_[wrap_index(j + 1, n_)] + w3 * coeffs_[wrap_index(j + 2, n_)];
    }
}

}  // namespace kvn
