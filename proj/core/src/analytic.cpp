#include "spincorr/analytic.hpp"

#include <cmath>
#include <limits>

#include "spincorr/core_model.hpp"

namespace spincorr {

namespace {

void check_sign(int sign) {
  if (sign != +1 && sign != -1) {
    throw std::invalid_argument("sign must be +1 or -1");
  }
}

}  // namespace

double correlation_probability(double phi, double omega, double tau,
                               int sign) {
  require_finite(phi, "phi");
  require_finite(omega, "omega");
  require_finite(tau, "tau");
  check_sign(sign);
  const double s = std::sin(2.0 * phi);
  return 0.5 * (1.0 + sign * s * s * std::cos(2.0 * omega * tau));
}

double precision_delta_omega(double phi, double omega, double tau) {
  require_finite(phi, "phi");
  require_finite(omega, "omega");
  require_finite(tau, "tau");
  const double s2 = std::sin(2.0 * phi);
  const double c = std::cos(2.0 * omega * tau);
  const double denom =
      2.0 * s2 * s2 * tau * std::abs(std::sin(2.0 * omega * tau));
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(1.0 - s2 * s2 * s2 * s2 * c * c) / denom;
}

double two_nucleus_correlation(double phi1, double phi2, double omega1,
                               double omega2, double tau, int sign) {
  check_sign(sign);
  const double s1 = std::sin(2.0 * phi1), c1 = std::cos(2.0 * phi1);
  const double s2 = std::sin(2.0 * phi2), c2 = std::cos(2.0 * phi2);
  const double term1 = std::cos(2.0 * omega1 * tau) * s1 * s1 * c2 * c2;
  const double term2 = std::cos(2.0 * omega2 * tau) * c1 * c1 * s2 * s2;
  return 0.5 + 0.5 * sign * (term1 + term2);
}

WeakCorrelation multi_weak_correlation(std::span<const double> phis,
                                       std::span<const double> omegas,
                                       double tau, int sign,
                                       double validity_phi) {
  check_sign(sign);
  if (phis.size() != omegas.size()) {
    throw std::invalid_argument("phis and omegas must have equal length");
  }
  WeakCorrelation out;
  double sum = 0.0;
  for (std::size_t i = 0; i < phis.size(); ++i) {
    require_finite(phis[i], "phi");
    require_finite(omegas[i], "omega");
    if (std::abs(phis[i]) > validity_phi) out.within_validity = false;
    sum += phis[i] * phis[i] * std::cos(2.0 * omegas[i] * tau);
  }
  out.p = 0.5 + sign * 2.0 * sum;
  return out;
}

TrajectoryWeight trajectory_weights(int n, int k, double phi) {
  if (n < 0 || k < 0 || k > n) {
    throw std::invalid_argument("need 0 <= k <= n");
  }
  require_finite(phi, "phi");
  const double qm = std::pow(std::sin(phi - kPi / 4.0), 2);
  const double qp = std::pow(std::sin(phi + kPi / 4.0), 2);
  TrajectoryWeight w;
  w.n = n;
  w.k = k;
  w.c = std::pow(qm, k) * std::pow(qp, n - k);
  w.d = std::pow(qp, k) * std::pow(qm, n - k);
  w.no_information = (std::sin(2.0 * phi) == 0.0);
  return w;
}

double trajectory_prob_polarized(int n, int k, double phi, double omega,
                                 double tau) {
  const TrajectoryWeight w = trajectory_weights(n, k, phi);
  const double c2 = std::pow(std::cos(omega * tau), 2);
  return w.c * c2 + w.d * (1.0 - c2);
}

double trajectory_prob_unpolarized(int n1, int n2, int k1, int k2, double phi,
                                   double omega, double tau) {
  const TrajectoryWeight w1 = trajectory_weights(n1, k1, phi);
  const TrajectoryWeight w2 = trajectory_weights(n2, k2, phi);
  const double c2 = std::pow(std::cos(omega * tau), 2);
  return 0.5 * c2 * (w1.c * w2.c + w1.d * w2.d) +
         0.5 * (1.0 - c2) * (w1.c * w2.d + w1.d * w2.c);
}

TrajectoryWeight imperfect_trajectory_weights(int n, int k, double phi,
                                              const DetectorModel& det) {
  if (n < 0 || k < 0 || k > n) {
    throw std::invalid_argument("need 0 <= k <= n");
  }
  require_finite(phi, "phi");
  det.validate();
  const double beta = std::pow(std::sin(phi - kPi / 4.0), 2);
  const double alpha = std::pow(std::sin(phi + kPi / 4.0), 2);
  // Photon probability per measurement: p1 given +x polarization, p2 given
  // -x. The bright state is identified with the outcome that is the minority
  // branch for a +x nucleus, which makes (a=1, b=0) reduce exactly to the
  // perfect-measurement weights.
  const double p1 = det.a * beta + det.b * alpha;
  const double p2 = det.a * alpha + det.b * beta;
  TrajectoryWeight w;
  w.n = n;
  w.k = k;
  w.c = std::pow(p1, k) * std::pow(1.0 - p1, n - k);
  w.d = std::pow(p2, k) * std::pow(1.0 - p2, n - k);
  w.no_information = det.uninformative() || (std::sin(2.0 * phi) == 0.0);
  return w;
}

double exact_joint_probability(std::span<const NucleusParams> nuclei,
                               double tau, double T) {
  if (nuclei.empty()) throw std::invalid_argument("need at least one nucleus");
  require_finite(tau, "tau");
  require_finite(T, "T");

  Complex prod_plus = 1.0;
  Complex prod_minus = 1.0;
  for (const NucleusParams& p : nuclei) {
    const Mat2 up = conditional_propagator(p, tau, +1).u;
    const Mat2 um = conditional_propagator(p, tau, -1).u;
    const double theta = p.omega * T;
    const Complex e_m = std::exp(Complex(0.0, -0.5 * theta));
    Mat2 rot;
    rot << e_m, 0.0, 0.0, std::conj(e_m);
    const Mat2 vp = up * rot;
    const Mat2 vm = um * rot;
    const Mat2 w = vm.adjoint() * vp;
    prod_plus *= (w * um * up.adjoint()).trace();
    prod_minus *= (w * up * um.adjoint()).trace();
  }
  const double p = 0.25 + std::ldexp(prod_plus.real() - prod_minus.real(),
                                     -static_cast<int>(nuclei.size()) - 3);
  return std::min(1.0, std::max(0.0, p));
}

}  // namespace spincorr
