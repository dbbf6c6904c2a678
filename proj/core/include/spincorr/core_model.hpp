#pragma once

#include <utility>

#include "spincorr/types.hpp"

namespace spincorr {

enum class Axis { x, y };
enum class PropagatorKind { detection, delayed };

// Unitary acting on the nucleus conditioned on one electron sigma_z branch.
struct ConditionalPropagator {
  Mat2 u;
  int sign = +1;
  PropagatorKind kind = PropagatorKind::detection;
};

// Nuclear-state update operator for one electron measurement outcome.
// Phases are fixed so that the delta = 0 matrices are real.
struct KrausOperator {
  Mat2 m;
  int outcome = +1;
  Axis init_axis = Axis::y;
  Axis meas_axis = Axis::x;
};

// Detection-period branch propagator:
//   u = cos(N t) - i sin(N t)/N (-sign g I_x + delta I_z),  N^2 = g^2 + delta^2.
// N = 0 returns the identity (continuous limit).
ConditionalPropagator conditional_propagator(const NucleusParams& p,
                                             double duration, int sign);

// Same branch propagator with the coupling axis advanced by rotation_phase:
// I_x -> I_x cos(phase) + I_y sin(phase). Reduces to conditional_propagator
// at phase 0 (mod 2 pi).
ConditionalPropagator delayed_propagator(const NucleusParams& p,
                                         double duration, double rotation_phase,
                                         int sign);

// Kraus pair for one weak measurement with the electron initialized along
// init_axis and read out along meas_axis. Supported: (y, x) and (x, y).
// Calibration for (y, x): outcome +1 on the maximally mixed state leaves
// x-polarization -sin(2 g tau_m).
std::pair<KrausOperator, KrausOperator> measurement_kraus_pair(
    const NucleusParams& p, double tau_m, Axis init_axis, Axis meas_axis);

KrausOperator measurement_kraus(const NucleusParams& p, double tau_m,
                                Axis init_axis, Axis meas_axis, int outcome);

struct KrausOutcome {
  double probability = 0.0;
  SpinState state;
  bool negligible = false;  // probability below 1e-14; post-state not usable
};

KrausOutcome apply_kraus(const SpinState& state, const KrausOperator& k);

// Free precession under omega I_z for time tau (Bloch rotation 2 omega tau).
SpinState free_rotation(const SpinState& state, double omega, double tau);

const char* axis_name(Axis a);

}  // namespace spincorr
