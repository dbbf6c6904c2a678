#pragma once

#include <Eigen/Dense>

#include "spincorr/common.hpp"

namespace spincorr {

// Two-level nuclear density matrix, fixed to the I_z eigenbasis.
// Spin operators follow the unit-square (Pauli) convention throughout:
// I_k^2 = identity, so a free rotation by angle a about z moves the Bloch
// vector by 2a.
struct SpinState {
  Mat2 rho;

  static SpinState maximally_mixed() { return {0.5 * Mat2::Identity()}; }

  static SpinState polarized_x(int sign = +1) {
    return {0.5 * (Mat2::Identity() + static_cast<double>(sign) * pauli_x())};
  }

  static SpinState polarized_y(int sign = +1) {
    return {0.5 * (Mat2::Identity() + static_cast<double>(sign) * pauli_y())};
  }

  static SpinState from_bloch(double x, double y, double z) {
    return {0.5 * (Mat2::Identity() + x * pauli_x() + y * pauli_y() +
                   z * pauli_z())};
  }

  Eigen::Vector3d bloch() const {
    return {(rho * pauli_x()).trace().real(),
            (rho * pauli_y()).trace().real(),
            (rho * pauli_z()).trace().real()};
  }

  bool is_valid(double tol = kAlgebraTol) const {
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
    if (std::abs(rho.trace().real() - 1.0) > tol ||
        std::abs(rho.trace().imag()) > tol) {
      return false;
    }
    // Eigenvalues of a 2x2 Hermitian matrix, in closed form.
    const double tr = rho.trace().real();
    const double det = rho.determinant().real();
    const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
    const double lo = 0.5 * (tr - disc);
    const double hi = 0.5 * (tr + disc);
    return lo >= -tol && hi <= 1.0 + tol;
  }

  // Restores exact hermiticity after long operator chains.
  void rehermitize() { rho = 0.5 * (rho + rho.adjoint()).eval(); }
};

// Per-nucleus coupling and detunings, all in rad/time.
//   g:     effective coupling strength in the detection periods
//   delta: detuning seen during detection
//   omega: detuning seen during the free-rotation period
struct NucleusParams {
  double g = 0.0;
  double delta = 0.0;
  double omega = 0.0;

  void validate() const {
    require_finite(g, "g");
    require_finite(delta, "delta");
    require_finite(omega, "omega");
    if (g < 0.0) throw std::invalid_argument("g must be >= 0");
  }
};

// Measurement counts and durations for one detection-rotation-detection run.
struct ProtocolSchedule {
  int n1 = 0;
  int n2 = 0;
  double tau_m = 0.0;  // per-measurement duration
  double tau = 0.0;    // free-rotation duration

  double total_time() const { return tau + (n1 + n2) * tau_m; }
  double phi(double g) const { return g * tau_m; }

  void validate() const {
    if (n1 < 0 || n2 < 0) throw std::invalid_argument("n1, n2 must be >= 0");
    require_finite(tau_m, "tau_m");
    require_finite(tau, "tau");
    if (tau_m <= 0.0) throw std::invalid_argument("tau_m must be > 0");
    if (tau < 0.0) throw std::invalid_argument("tau must be >= 0");
  }
};

// Optical readout model: photon emission probabilities for the bright and the
// dark electron state.
struct DetectorModel {
  double a = 1.0;  // bright-state photon probability
  double b = 0.0;  // dark-state photon probability

  void validate() const {
    require_finite(a, "a");
    require_finite(b, "b");
    if (a < 0.0 || a > 1.0 || b < 0.0 || b > 1.0) {
      throw std::invalid_argument("detector probabilities must be in [0,1]");
    }
  }

  bool uninformative() const { return a == b; }
};

}  // namespace spincorr
