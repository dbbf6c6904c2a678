#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "spincorr/types.hpp"

namespace spincorr {

enum class Regime { weak, crossover, strong };

const char* regime_name(Regime r);

// Reporting convention: chi = kappa g^2 tau_m T with kappa = (a-b)^2/(a+b)
// for a detector and 1 otherwise; weak below 0.1, strong above 10.
Regime classify_regime(double phi, double tau_m, double T,
                       const DetectorModel* det = nullptr);

struct FisherResult {
  double info = 0.0;
  int n1 = 0;
  int n2 = 0;
  double p_meas_sq_avg = 0.0;
  double p_pol_sq_avg = 0.0;
  Regime regime = Regime::weak;
  bool zero_information = false;
};

// Trajectory-averaged squared measurement strength <p_meas^2> for n weak
// measurements; the two-binomial form makes this O(sqrt(n)) for any n.
double p_meas_sq_avg(std::int64_t n, double phi,
                     const DetectorModel* det = nullptr);

// Fisher information about omega for a polarized nucleus read out by n weak
// measurements after a rotation of length T - n tau_m. With optimize_phase
// the rotation phase is set to the fringe maximum; otherwise the supplied
// omega is used.
FisherResult fisher_polarized(int n, double phi, double omega, double T,
                              double tau_m, bool optimize_phase,
                              const DetectorModel* det = nullptr);

// Unpolarized variant: n1 polarizing measurements, rotation, n2 readout
// measurements.
FisherResult fisher_unpolarized(int n1, int n2, double phi, double omega,
                                double T, double tau_m, bool optimize_phase,
                                const DetectorModel* det = nullptr);

// Closed form for one polarizing and one readout measurement under a
// detector model, at the optimal rotation phase:
//   I = [2 (a-b)^2 sin^2(2 phi) / ((a+b)(2-a-b))]^2 T^2.
double fisher_two_weak_imperfect(double phi, double T, const DetectorModel& det);

// Small-(a, b) suppression of the two-measurement Fisher information
// relative to perfect readout: ((a-b)^2 / (2(a+b)))^2.
double two_measurement_suppression(const DetectorModel& det);

// Photon-count composition of the unpolarized Fisher information.
FisherResult fisher_imperfect_multi(int n1, int n2, double phi,
                                    const DetectorModel& det, double T,
                                    double tau_m, bool optimize_phase = true,
                                    double omega = 0.0);

struct OptimizeResult {
  int n1 = 0;
  int n2 = 0;
  FisherResult fisher;
};

// Exhaustive scan over the measurement count (n1 = n2 in the unpolarized
// case); ties break toward the smallest n.
OptimizeResult optimize_measurement_count(double phi, double T, double tau_m,
                                          const DetectorModel* det,
                                          bool polarized);

struct ConvergenceThreshold {
  bool finite = true;
  std::uint64_t n = 1;
};

// Measurement count where a repeated weak measurement becomes effectively
// strong: cot^2(2 phi) for perfect readout, 3(a+b)/(4 (a-b)^2 phi^2) with a
// detector. a = b gives an infinite threshold.
ConvergenceThreshold convergence_threshold(double phi,
                                           const DetectorModel* det = nullptr);

struct PMeasDistribution {
  struct Row {
    std::int64_t k;
    double c;       // per-order weight given +x polarization
    double d;       // per-order weight given -x polarization
    double p;       // outcome-count probability, (p1(k) + p2(k))/2
    double p_meas;  // (c - d) / (c + d)
  };
  std::vector<Row> rows;  // effective support only
  double p_meas_sq_avg = 0.0;
  std::int64_t k_lo = 0;
  std::int64_t k_hi = 0;
};

PMeasDistribution p_meas_distribution(std::int64_t n, double phi,
                                      const DetectorModel* det = nullptr);

// d p_k / d omega for the polarized outcome-count law; used by the
// derivative cross-checks.
double trajectory_prob_polarized_domega(int n, int k, double phi, double omega,
                                        double tau);

}  // namespace spincorr
