#pragma once

#include <span>

namespace kvn {

/// Least-squares slope of log(y) against log(x). Requires at least two
/// strictly positive pairs.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace kvn
