#include "kvn/statistics.hpp"

#include <cmath>

#include "kvn/error.hpp"

namespace kvn {

double loglog_slope(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2) throw validation_error("slope fit needs at least two (x, y) pairs");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw validation_error("slope fit needs positive values");
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw validation_error("slope fit needs distinct x values");
    return (n * sxy - sx * sy) / denom;
}

}  // namespace kvn
