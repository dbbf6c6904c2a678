#pragma once

#include <span>
#include <vector>

#include "spincorr/types.hpp"

namespace spincorr {

// Probability that two measurements separated by a free rotation of length
// tau agree (sign = +1) or disagree (sign = -1), for measurement strength
// phi = g tau_m and rotation detuning omega:
//   p = 1/2 [1 + sign sin^2(2 phi) cos(2 omega tau)].
double correlation_probability(double phi, double omega, double tau, int sign);

// Single-experiment frequency uncertainty for the two-measurement scheme.
// Returns +inf at the derivative nodes (sin(2 omega tau) = 0) and at
// sin(2 phi) = 0.
double precision_delta_omega(double phi, double omega, double tau);

// Two-nucleus correlation probability, with the cos^2(2 phi_j) interference
// factor from the spectator nucleus.
double two_nucleus_correlation(double phi1, double phi2, double omega1,
                               double omega2, double tau, int sign);

struct WeakCorrelation {
  double p = 0.5;
  bool within_validity = true;  // all couplings below the validity threshold
};

// Weak-coupling n-nucleus correlation, p = 1/2 + sign 2 sum phi_k^2
// cos(2 omega_k tau). Accurate to O(phi^4).
WeakCorrelation multi_weak_correlation(std::span<const double> phis,
                                       std::span<const double> omegas,
                                       double tau, int sign,
                                       double validity_phi = 0.2);

// Per-ordered-trajectory weights for k counted outcomes in n measurements:
// c is the weight given +x initial polarization, d given -x.
struct TrajectoryWeight {
  double c = 1.0;
  double d = 1.0;
  int n = 0;
  int k = 0;
  bool no_information = false;  // c == d for every k
};

TrajectoryWeight trajectory_weights(int n, int k, double phi);

// Probability of one specific outcome order with k counted outcomes, for a
// +x-polarized nucleus rotated by omega tau before n measurements.
double trajectory_prob_polarized(int n, int k, double phi, double omega,
                                 double tau);

// Same for an unpolarized nucleus with n1 measurements, a rotation, then n2
// measurements; (k1, k2) counted outcomes per period.
double trajectory_prob_unpolarized(int n1, int n2, int k1, int k2, double phi,
                                   double omega, double tau);

// Photon-count trajectory weights under a detector model; reduces to
// trajectory_weights at (a = 1, b = 0).
TrajectoryWeight imperfect_trajectory_weights(int n, int k, double phi,
                                              const DetectorModel& det);

// Exact joint probability of two equal-outcome detections for any number of
// nuclei, without the weak-coupling assumption. tau is the detection duration
// per period; the rotation phase of nucleus k is omega_k * T (full Bloch
// angle). Evaluated from per-nucleus 2x2 branch-propagator traces.
double exact_joint_probability(std::span<const NucleusParams> nuclei,
                               double tau, double T);

}  // namespace spincorr
