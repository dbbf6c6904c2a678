#include "spincorr/core_model.hpp"

#include <cmath>
#include <string>

namespace spincorr {

namespace {

constexpr Complex kI{0.0, 1.0};

void check_sign(int sign) {
  if (sign != +1 && sign != -1) {
    throw std::invalid_argument("sign must be +1 or -1");
  }
}

// exp(-i duration (delta I_z - sign g (I_x cos(phase) + I_y sin(phase)))),
// evaluated in closed form.
Mat2 branch_unitary(const NucleusParams& p, double duration, double phase,
                    int sign) {
  const double nk = std::hypot(p.g, p.delta);
  const double x = nk * duration;
  const double c = std::cos(x);
  const double s = duration * sinc(x);  // sin(N t)/N, stable as N -> 0
  const Mat2 axis = std::cos(phase) * pauli_x() + std::sin(phase) * pauli_y();
  return c * Mat2::Identity() -
         kI * s * (-static_cast<double>(sign) * p.g * axis + p.delta * pauli_z());
}

}  // namespace

const char* axis_name(Axis a) { return a == Axis::x ? "x" : "y"; }

ConditionalPropagator conditional_propagator(const NucleusParams& p,
                                             double duration, int sign) {
  p.validate();
  require_finite(duration, "duration");
  if (duration < 0.0) throw std::invalid_argument("duration must be >= 0");
  check_sign(sign);
  return {branch_unitary(p, duration, 0.0, sign), sign,
          PropagatorKind::detection};
}

ConditionalPropagator delayed_propagator(const NucleusParams& p,
                                         double duration, double rotation_phase,
                                         int sign) {
  p.validate();
  require_finite(duration, "duration");
  require_finite(rotation_phase, "rotation_phase");
  if (duration < 0.0) throw std::invalid_argument("duration must be >= 0");
  check_sign(sign);
  return {branch_unitary(p, duration, rotation_phase, sign), sign,
          PropagatorKind::delayed};
}

std::pair<KrausOperator, KrausOperator> measurement_kraus_pair(
    const NucleusParams& p, double tau_m, Axis init_axis, Axis meas_axis) {
  p.validate();
  require_finite(tau_m, "tau_m");
  if (tau_m <= 0.0) throw std::invalid_argument("tau_m must be > 0");
  if (init_axis == meas_axis) {
    throw std::invalid_argument(
        std::string("unsupported axis combination (init=") +
        axis_name(init_axis) + ", meas=" + axis_name(meas_axis) +
        "): supported are (y, x) and (x, y)");
  }

  // Electron sigma_z = +/-1 branch propagators for H = delta I_z + s g I_x.
  const double nk = std::hypot(p.g, p.delta);
  const double x = nk * tau_m;
  const double c = std::cos(x);
  const double s = tau_m * sinc(x);
  const Mat2 up = c * Mat2::Identity() -
                  kI * s * (p.delta * pauli_z() + p.g * pauli_x());
  const Mat2 um = c * Mat2::Identity() -
                  kI * s * (p.delta * pauli_z() - p.g * pauli_x());

  const Complex ph_m(std::sqrt(0.5), -std::sqrt(0.5));  // e^{-i pi/4}
  const Complex ph_p(std::sqrt(0.5), std::sqrt(0.5));   // e^{+i pi/4}

  Mat2 k_plus, k_minus;
  if (init_axis == Axis::y) {  // initialize |up_y>, read out sigma_x
    k_plus = ph_m * 0.5 * (up + kI * um);
    k_minus = ph_p * 0.5 * (up - kI * um);
  } else {  // initialize |up_x>, read out sigma_y
    k_plus = ph_p * 0.5 * (up - kI * um);
    k_minus = ph_m * 0.5 * (up + kI * um);
  }
  return {KrausOperator{k_plus, +1, init_axis, meas_axis},
          KrausOperator{k_minus, -1, init_axis, meas_axis}};
}

KrausOperator measurement_kraus(const NucleusParams& p, double tau_m,
                                Axis init_axis, Axis meas_axis, int outcome) {
  check_sign(outcome);
  auto pair = measurement_kraus_pair(p, tau_m, init_axis, meas_axis);
  return outcome == +1 ? pair.first : pair.second;
}

KrausOutcome apply_kraus(const SpinState& state, const KrausOperator& k) {
  Mat2 updated = k.m * state.rho * k.m.adjoint();
  updated = 0.5 * (updated + updated.adjoint()).eval();
  const double prob = updated.trace().real();
  KrausOutcome out;
  out.probability = std::min(1.0, std::max(0.0, prob));
  if (prob < 1e-14) {
    out.negligible = true;
    out.state = state;
    return out;
  }
  out.state = SpinState{updated / prob};
  return out;
}

SpinState free_rotation(const SpinState& state, double omega, double tau) {
  require_finite(omega, "omega");
  require_finite(tau, "tau");
  const Complex e_m = std::exp(Complex(0.0, -omega * tau));
  const Complex e_p = std::exp(Complex(0.0, omega * tau));
  Mat2 u;
  u << e_m, 0.0, 0.0, e_p;
  SpinState out{u * state.rho * u.adjoint()};
  out.rehermitize();
  return out;
}

}  // namespace spincorr
