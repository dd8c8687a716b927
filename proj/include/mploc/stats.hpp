#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

// Estimation helpers shared by the Monte Carlo modules: compensated
// summation, mean/standard-error aggregation, least-squares fits, and a
// deterministic parallel loop.

namespace mploc {

// Kahan-Babuska compensated accumulator. Reductions that must be
// identical across thread counts always run through one of these in a
// fixed order.
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct MomentEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample std / sqrt(M); 0 when M < 2
  std::size_t M = 0;
  double s = 0.0;              // fractional exponent of the estimated moment
  std::string query;           // free-form provenance (pair, energy window)
  std::uint64_t seed = 0;
};

// Ordered compensated mean/SE over samples.
MomentEstimate estimate_from_samples(std::span<const double> samples);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
  bool ok = false;
};

// Weighted least squares y ~ intercept + slope*x; weights >= 0.
LineFit weighted_line_fit(std::span<const double> x, std::span<const double> y,
                          std::span<const double> w);
LineFit line_fit(std::span<const double> x, std::span<const double> y);

// Runs fn(i) for i in [0,n) on up to `threads` workers (0 = hardware
// concurrency). Each index writes only its own output slot, so results
// never depend on the schedule.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace mploc
