#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "spincorr/simulate.hpp"

namespace spincorr {

// Candidate grid [lo, hi] scanned at the given step before refinement. For an
// oscillatory likelihood the step should resolve the fringes (<= pi / (4 T)).
struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;

  void validate() const;
};

struct MleResult {
  double estimate = 0.0;
  bool identifiable = true;
  double log_likelihood = 0.0;
};

// Coarse grid scan followed by golden-section refinement; ties break toward
// the smallest candidate. A likelihood range below 1e-9 nats across the grid
// is reported as non-identifiable.
MleResult maximize_on_grid(const std::function<double(double)>& log_lik,
                           const GridSpec& grid);

// Maximum-likelihood rotation-detuning estimate from a set of records sharing
// one configuration.
MleResult mle_frequency(std::span<const MeasurementRecord> records,
                        const GridSpec& grid);

struct Histogram {
  std::vector<double> edges;
  std::vector<std::uint64_t> counts;
};

// Freedman-Diaconis binning.
Histogram make_histogram(std::span<const double> values);

struct CrbConfig {
  SimConfig sim;
  GridSpec grid;
};

struct CrbCheck {
  double empirical_variance = 0.0;
  double predicted_variance = 0.0;  // 1 / (shots * per-record information)
  double ratio = 0.0;
  double ratio_ci_lo = 0.0;  // bootstrap 95% interval
  double ratio_ci_hi = 0.0;
  double mean_estimate = 0.0;
  std::vector<double> estimates;
};

// Repeats (simulate shots records, estimate) over independent experiments and
// compares the estimator variance to the Fisher prediction.
CrbCheck crb_check(const CrbConfig& cfg, std::uint64_t shots_per_experiment,
                   std::uint64_t experiments, std::uint64_t master_seed,
                   int threads = 1);

struct EstimationReport {
  std::vector<double> estimates;
  double empirical_variance = 0.0;
  double fi_predicted_variance = 0.0;
  GridSpec grid;
  Histogram hist;
};

struct TwoFrequencyScan {
  double omega1 = 0.0;
  double omega2 = 0.0;
  double log_likelihood = 0.0;
};

// Resolution demonstration: weak-coupling two-frequency likelihood evaluated
// on a grid; records must come from a two-nucleus, n1 = n2 = 1 configuration.
TwoFrequencyScan resolve_two_frequencies(
    std::span<const MeasurementRecord> records, const GridSpec& grid);

}  // namespace spincorr
