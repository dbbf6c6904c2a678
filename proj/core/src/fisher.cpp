#include "spincorr/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spincorr {

namespace {

struct BinomPair {
  std::int64_t n = 0;
  double p1 = 0.0;  // counted-outcome probability given +x polarization
  double p2 = 0.0;  // same given -x polarization
};

BinomPair outcome_binomials(std::int64_t n, double phi,
                            const DetectorModel* det) {
  require_finite(phi, "phi");
  if (n < 0) throw std::invalid_argument("n must be >= 0");
  const double beta = std::pow(std::sin(phi - kPi / 4.0), 2);
  const double alpha = std::pow(std::sin(phi + kPi / 4.0), 2);
  BinomPair bp;
  bp.n = n;
  if (det != nullptr) {
    det->validate();
    bp.p1 = det->a * beta + det->b * alpha;
    bp.p2 = det->a * alpha + det->b * beta;
  } else {
    bp.p1 = beta;
    bp.p2 = alpha;
  }
  return bp;
}

double log_binom_pmf(std::int64_t n, std::int64_t k, double p) {
  if (p <= 0.0) {
    return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  if (p >= 1.0) {
    return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  return std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) -
         std::lgamma(nd - kd + 1.0) + kd * std::log(p) +
         (nd - kd) * std::log1p(-p);
}

double binom_pmf(std::int64_t n, std::int64_t k, double p) {
  const double lp = log_binom_pmf(n, k, p);
  return std::isinf(lp) ? 0.0 : std::exp(lp);
}

// Union of +-12 sigma windows around the two binomial means; wide enough that
// the truncated tail mass is negligible at double precision.
std::vector<std::pair<std::int64_t, std::int64_t>> support_windows(
    const BinomPair& bp) {
  auto window = [&](double p) -> std::pair<std::int64_t, std::int64_t> {
    const double mu = bp.n * p;
    const double sigma = std::sqrt(std::max(bp.n * p * (1.0 - p), 0.0));
    const double lo = mu - 12.0 * sigma - 4.0;
    const double hi = mu + 12.0 * sigma + 4.0;
    return {std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(lo))),
            std::min<std::int64_t>(bp.n,
                                   static_cast<std::int64_t>(std::ceil(hi)))};
  };
  auto w1 = window(bp.p1);
  auto w2 = window(bp.p2);
  if (w1.first > w2.first) std::swap(w1, w2);
  if (w2.first <= w1.second + 1) {
    return {{w1.first, std::max(w1.second, w2.second)}};
  }
  return {w1, w2};
}

// Calls fn(P1(k), P2(k)) for every k in the effective support.
template <typename Fn>
void for_support(const BinomPair& bp, Fn&& fn) {
  for (const auto& [lo, hi] : support_windows(bp)) {
    for (std::int64_t k = lo; k <= hi; ++k) {
      fn(k, binom_pmf(bp.n, k, bp.p1), binom_pmf(bp.n, k, bp.p2));
    }
  }
}

double p_meas_sq_avg_impl(const BinomPair& bp) {
  if (bp.n == 0) return 0.0;
  double sum = 0.0;
  for_support(bp, [&](std::int64_t, double q1, double q2) {
    const double tot = q1 + q2;
    if (tot > 0.0) {
      const double diff = q1 - q2;
      sum += diff * diff / tot;
    }
  });
  return std::min(1.0, 0.5 * sum);
}

void check_schedule(std::int64_t n, double T, double tau_m) {
  require_finite(T, "T");
  require_finite(tau_m, "tau_m");
  if (tau_m <= 0.0) throw std::invalid_argument("tau_m must be > 0");
  if (static_cast<double>(n) * tau_m >= T) {
    throw ConfigError("infeasible schedule: n tau_m must be < T");
  }
}

}  // namespace

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::weak:
      return "weak";
    case Regime::strong:
      return "strong";
    default:
      return "crossover";
  }
}

Regime classify_regime(double phi, double tau_m, double T,
                       const DetectorModel* det) {
  double kappa = 1.0;
  if (det != nullptr && det->a + det->b > 0.0) {
    kappa = (det->a - det->b) * (det->a - det->b) / (det->a + det->b);
  }
  const double chi = kappa * phi * phi / tau_m * T;
  if (chi < 0.1) return Regime::weak;
  if (chi > 10.0) return Regime::strong;
  return Regime::crossover;
}

double p_meas_sq_avg(std::int64_t n, double phi, const DetectorModel* det) {
  return p_meas_sq_avg_impl(outcome_binomials(n, phi, det));
}

FisherResult fisher_polarized(int n, double phi, double omega, double T,
                              double tau_m, bool optimize_phase,
                              const DetectorModel* det) {
  check_schedule(n, T, tau_m);
  require_finite(omega, "omega");
  const double tau = T - n * tau_m;
  FisherResult out;
  out.n1 = 0;
  out.n2 = n;
  out.p_pol_sq_avg = 1.0;
  out.regime = classify_regime(phi, tau_m, T, det);

  const BinomPair bp = outcome_binomials(n, phi, det);
  out.p_meas_sq_avg = p_meas_sq_avg_impl(bp);
  if (n == 0 || out.p_meas_sq_avg == 0.0) {
    out.zero_information = true;
    return out;
  }
  if (optimize_phase) {
    out.info = 4.0 * out.p_meas_sq_avg * tau * tau;
    return out;
  }
  const double c2 = std::pow(std::cos(omega * tau), 2);
  const double s2w = std::pow(std::sin(2.0 * omega * tau), 2);
  double sum = 0.0;
  for_support(bp, [&](std::int64_t, double q1, double q2) {
    const double denom = q1 * c2 + q2 * (1.0 - c2);
    if (denom > 1e-300) {
      const double diff = q1 - q2;
      sum += diff * diff / denom;
    }
  });
  out.info = tau * tau * s2w * sum;
  out.zero_information = (out.info == 0.0);
  return out;
}

FisherResult fisher_unpolarized(int n1, int n2, double phi, double omega,
                                double T, double tau_m, bool optimize_phase,
                                const DetectorModel* det) {
  check_schedule(static_cast<std::int64_t>(n1) + n2, T, tau_m);
  require_finite(omega, "omega");
  const double tau = T - (n1 + n2) * tau_m;
  FisherResult out;
  out.n1 = n1;
  out.n2 = n2;
  out.regime = classify_regime(phi, tau_m, T, det);

  const BinomPair bp1 = outcome_binomials(n1, phi, det);
  const BinomPair bp2 = outcome_binomials(n2, phi, det);
  out.p_pol_sq_avg = p_meas_sq_avg_impl(bp1);
  out.p_meas_sq_avg = p_meas_sq_avg_impl(bp2);
  if (n1 == 0 || n2 == 0 || out.p_pol_sq_avg == 0.0 ||
      out.p_meas_sq_avg == 0.0) {
    out.zero_information = true;
    return out;
  }
  if (optimize_phase) {
    out.info = 4.0 * out.p_pol_sq_avg * out.p_meas_sq_avg * tau * tau;
    return out;
  }
  const double cw = std::cos(2.0 * omega * tau);
  const double s2w = std::pow(std::sin(2.0 * omega * tau), 2);
  double sum = 0.0;
  for_support(bp1, [&](std::int64_t, double a1, double a2) {
    for_support(bp2, [&](std::int64_t, double b1, double b2) {
      const double s = (a1 + a2) * (b1 + b2);
      const double d = (a1 - a2) * (b1 - b2);
      const double prob = 0.25 * (s + d * cw);
      if (prob > 1e-300) sum += d * d / prob;
    });
  });
  out.info = 0.25 * tau * tau * s2w * sum;
  out.zero_information = (out.info == 0.0);
  return out;
}

double fisher_two_weak_imperfect(double phi, double T,
                                 const DetectorModel& det) {
  require_finite(phi, "phi");
  require_finite(T, "T");
  det.validate();
  const double ab_sum = det.a + det.b;
  if (det.a == det.b || ab_sum <= 0.0 || ab_sum >= 2.0) return 0.0;
  const double diff2 = (det.a - det.b) * (det.a - det.b);
  const double s2 = std::pow(std::sin(2.0 * phi), 2);
  const double bracket = 2.0 * diff2 * s2 / (ab_sum * (2.0 - ab_sum));
  return bracket * bracket * T * T;
}

double two_measurement_suppression(const DetectorModel& det) {
  det.validate();
  if (det.a + det.b <= 0.0) return 0.0;
  const double r = (det.a - det.b) * (det.a - det.b) / (2.0 * (det.a + det.b));
  return r * r;
}

FisherResult fisher_imperfect_multi(int n1, int n2, double phi,
                                    const DetectorModel& det, double T,
                                    double tau_m, bool optimize_phase,
                                    double omega) {
  return fisher_unpolarized(n1, n2, phi, omega, T, tau_m, optimize_phase,
                            &det);
}

OptimizeResult optimize_measurement_count(double phi, double T, double tau_m,
                                          const DetectorModel* det,
                                          bool polarized) {
  require_finite(T, "T");
  require_finite(tau_m, "tau_m");
  if (tau_m <= 0.0) throw std::invalid_argument("tau_m must be > 0");
  if (T <= 0.0) throw ConfigError("infeasible schedule: T must be > 0");
  std::int64_t n_max =
      static_cast<std::int64_t>(std::ceil(T / tau_m)) - 1;
  while (n_max > 0 && static_cast<double>(n_max) * tau_m >= T) --n_max;
  if (n_max < 0) n_max = 0;

  OptimizeResult best;
  bool first = true;
  if (polarized) {
    for (std::int64_t n = 0; n <= n_max; ++n) {
      FisherResult f =
          fisher_polarized(static_cast<int>(n), phi, 0.0, T, tau_m, true, det);
      if (first || f.info > best.fisher.info) {
        best = {0, static_cast<int>(n), f};
        first = false;
      }
    }
  } else {
    for (std::int64_t m = 0; 2 * m <= n_max; ++m) {
      FisherResult f =
          fisher_unpolarized(static_cast<int>(m), static_cast<int>(m), phi,
                             0.0, T, tau_m, true, det);
      if (first || f.info > best.fisher.info) {
        best = {static_cast<int>(m), static_cast<int>(m), f};
        first = false;
      }
    }
  }
  return best;
}

ConvergenceThreshold convergence_threshold(double phi,
                                           const DetectorModel* det) {
  require_finite(phi, "phi");
  if (phi <= 0.0) throw std::invalid_argument("phi must be > 0");
  ConvergenceThreshold out;
  double value;
  if (det != nullptr) {
    det->validate();
    if (det->uninformative()) {
      out.finite = false;
      out.n = std::numeric_limits<std::uint64_t>::max();
      return out;
    }
    const double diff2 = (det->a - det->b) * (det->a - det->b);
    value = 3.0 * (det->a + det->b) / (4.0 * diff2 * phi * phi);
  } else {
    const double s = std::sin(2.0 * phi);
    if (s == 0.0) {
      out.finite = false;
      out.n = std::numeric_limits<std::uint64_t>::max();
      return out;
    }
    const double cot = std::cos(2.0 * phi) / s;
    value = cot * cot;
  }
  out.n = static_cast<std::uint64_t>(
      std::max(1.0, std::ceil(value - 1e-9)));
  return out;
}

PMeasDistribution p_meas_distribution(std::int64_t n, double phi,
                                      const DetectorModel* det) {
  const BinomPair bp = outcome_binomials(n, phi, det);
  PMeasDistribution out;
  out.p_meas_sq_avg = p_meas_sq_avg_impl(bp);
  out.k_lo = n;
  out.k_hi = 0;
  const double log_binom_floor = -745.0;  // below exp() underflow
  for_support(bp, [&](std::int64_t k, double q1, double q2) {
    const double lc = log_binom_pmf(bp.n, k, bp.p1);
    const double ld = log_binom_pmf(bp.n, k, bp.p2);
    PMeasDistribution::Row row;
    row.k = k;
    // Per-order weights: pmf without the binomial multiplicity.
    const double lmult = std::lgamma(static_cast<double>(bp.n) + 1.0) -
                         std::lgamma(static_cast<double>(k) + 1.0) -
                         std::lgamma(static_cast<double>(bp.n - k) + 1.0);
    row.c = (lc > log_binom_floor) ? std::exp(lc - lmult) : 0.0;
    row.d = (ld > log_binom_floor) ? std::exp(ld - lmult) : 0.0;
    row.p = 0.5 * (q1 + q2);
    row.p_meas = (q1 + q2 > 0.0) ? (q1 - q2) / (q1 + q2) : 0.0;
    out.rows.push_back(row);
    out.k_lo = std::min(out.k_lo, k);
    out.k_hi = std::max(out.k_hi, k);
  });
  return out;
}

double trajectory_prob_polarized_domega(int n, int k, double phi, double omega,
                                        double tau) {
  const double beta = std::pow(std::sin(phi - kPi / 4.0), 2);
  const double alpha = std::pow(std::sin(phi + kPi / 4.0), 2);
  const double c = std::pow(beta, k) * std::pow(alpha, n - k);
  const double d = std::pow(alpha, k) * std::pow(beta, n - k);
  return -(c - d) * tau * std::sin(2.0 * omega * tau);
}

}  // namespace spincorr
