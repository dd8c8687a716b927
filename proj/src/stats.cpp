#include "mploc/stats.hpp"

#include <algorithm>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace mploc {

MomentEstimate estimate_from_samples(std::span<const double> samples) {
  MomentEstimate e;
  e.M = samples.size();
  if (samples.empty()) return e;
  KahanSum s;
  for (double x : samples) s.add(x);
  e.mean = s.value() / static_cast<double>(samples.size());
  if (samples.size() >= 2) {
    KahanSum q;
    for (double x : samples) {
      const double d = x - e.mean;
      q.add(d * d);
    }
    const double var = q.value() / static_cast<double>(samples.size() - 1);
    e.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(samples.size()));
  }
  return e;
}

LineFit weighted_line_fit(std::span<const double> x, std::span<const double> y,
                          std::span<const double> w) {
  LineFit f;
  if (x.size() != y.size() || x.size() != w.size() || x.size() < 2) return f;
  KahanSum sw, swx, swy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw.add(w[i]);
    swx.add(w[i] * x[i]);
    swy.add(w[i] * y[i]);
  }
  const double W = sw.value();
  if (W <= 0) return f;
  const double xbar = swx.value() / W;
  const double ybar = swy.value() / W;
  KahanSum sxx, sxy, syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx.add(w[i] * (x[i] - xbar) * (x[i] - xbar));
    sxy.add(w[i] * (x[i] - xbar) * (y[i] - ybar));
    syy.add(w[i] * (y[i] - ybar) * (y[i] - ybar));
  }
  if (sxx.value() <= 0) return f;
  f.slope = sxy.value() / sxx.value();
  f.intercept = ybar - f.slope * xbar;
  KahanSum res;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    res.add(w[i] * r * r);
  }
  const double sst = syy.value();
  f.r2 = sst > 0 ? 1.0 - res.value() / sst : 1.0;
  if (x.size() > 2 && sst > 0) {
    const double sigma2 = res.value() / (W * (1.0 - 2.0 / static_cast<double>(x.size())));
    f.slope_se = std::sqrt(std::max(sigma2, 0.0) / sxx.value());
  }
  f.ok = true;
  return f;
}

LineFit line_fit(std::span<const double> x, std::span<const double> y) {
  std::vector<double> w(x.size(), 1.0);
  return weighted_line_fit(x, y, w);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const unsigned t = threads <= 0 ? hw : static_cast<unsigned>(threads);
  const unsigned workers = std::min<unsigned>(t, static_cast<unsigned>(n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex err_mutex;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mploc
