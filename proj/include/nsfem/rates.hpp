#ifndef NSFEM_RATES_HPP
#define NSFEM_RATES_HPP

#include <span>

namespace nsfem {

struct RateFit {
  double slope = 0.0;
  /// coefficient of determination of the log-log fit
  double r2 = 0.0;
};

/// Least-squares slope of log(err) against log(h). Needs at least three
/// strictly positive pairs.
RateFit fit_rate(std::span<const double> hs, std::span<const double> errs);

}  // namespace nsfem

#endif  // NSFEM_RATES_HPP
