#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "mploc/model.hpp"
#include "mploc/spectral.hpp"

// Disorder-ensemble description shared by the Monte Carlo modules: the
// model, the realization count, and how the spectral parameter is
// sampled (one fixed z, or a uniform energy grid over an interval with a
// small imaginary offset).

namespace mploc {

struct EnergySampling {
  std::optional<std::complex<double>> z;  // fixed-z mode
  std::optional<Interval> I;              // grid mode
  int nodes_per_unit = 64;
  double epsilon = 1e-6;  // imaginary offset for real-energy resolvents

  std::vector<double> grid() const;  // midpoint nodes over I
};

struct EnsembleSpec {
  ModelSpec model;
  int M = 100;
  EnergySampling energy;
  int threads = 0;  // 0 = hardware concurrency
};

}  // namespace mploc
