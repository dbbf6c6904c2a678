#include "spincorr/nmr.hpp"

#include <algorithm>
#include <cmath>

#include "spincorr/fisher.hpp"
#include "spincorr/parallel.hpp"
#include "spincorr/rng.hpp"

namespace spincorr {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr int kMaxEnumerationSteps = 24;

SpinState initial_state(NmrInit init) {
  switch (init) {
    case NmrInit::polarized_x:
      return SpinState::polarized_x();
    case NmrInit::polarized_y:
      return SpinState::polarized_y();
    default:
      return SpinState::maximally_mixed();
  }
}

// Free-evolution times inserted before each measurement.
std::vector<double> pre_gaps(const NmrConfig& cfg) {
  std::vector<double> gaps(cfg.n_steps, 0.0);
  if (cfg.gap_total <= 0.0 || cfg.n_steps == 0) return gaps;
  switch (cfg.gap_mode) {
    case GapMode::none:
      break;
    case GapMode::uniform:
      if (cfg.n_steps > 1) {
        for (int i = 1; i < cfg.n_steps; ++i) {
          gaps[i] = cfg.gap_total / (cfg.n_steps - 1);
        }
      } else {
        gaps[0] = cfg.gap_total;
      }
      break;
    case GapMode::centered:
      gaps[cfg.n_steps / 2] = cfg.gap_total;
      break;
  }
  return gaps;
}

struct StepOps {
  Mat2 c_plus, c_minus;
  Mat2 dc_plus, dc_minus;  // d/d delta
};

StepOps step_ops(const NmrConfig& cfg) {
  StepOps ops;
  ops.c_plus = nmr_kraus(cfg.g, cfg.delta, cfg.tau_m, +1).m;
  ops.c_minus = nmr_kraus(cfg.g, cfg.delta, cfg.tau_m, -1).m;
  ops.dc_plus = nmr_kraus_ddelta(cfg.g, cfg.delta, cfg.tau_m, +1);
  ops.dc_minus = nmr_kraus_ddelta(cfg.g, cfg.delta, cfg.tau_m, -1);
  return ops;
}

Mat2 gap_unitary(double delta, double gap) {
  Mat2 r;
  r << std::exp(Complex(0.0, -delta * gap)), 0.0, 0.0,
      std::exp(Complex(0.0, delta * gap));
  return r;
}

Mat2 gap_unitary_ddelta(double delta, double gap) {
  return -kI * gap * pauli_z() * gap_unitary(delta, gap);
}

// Exact Fisher information by recursing over every outcome string, carrying
// the unnormalized branch state M and its delta-derivative D.
struct Enumerator {
  const StepOps& ops;
  const std::vector<double>& gaps;
  double delta;
  int n;
  double fi = 0.0;

  void walk(int depth, const Mat2& m, const Mat2& d) {
    if (depth == n) {
      const double p = m.trace().real();
      if (p > 1e-300) {
        const double dp = d.trace().real();
        fi += dp * dp / p;
      }
      return;
    }
    Mat2 m_in = m, d_in = d;
    if (gaps[depth] > 0.0) {
      const Mat2 r = gap_unitary(delta, gaps[depth]);
      const Mat2 dr = gap_unitary_ddelta(delta, gaps[depth]);
      d_in = dr * m * r.adjoint() + r * d * r.adjoint() +
             r * m * dr.adjoint();
      m_in = r * m * r.adjoint();
    }
    for (int o = 0; o < 2; ++o) {
      const Mat2& c = o == 0 ? ops.c_plus : ops.c_minus;
      const Mat2& dc = o == 0 ? ops.dc_plus : ops.dc_minus;
      const Mat2 m_next = c * m_in * c.adjoint();
      const Mat2 d_next =
          dc * m_in * c.adjoint() + c * d_in * c.adjoint() +
          c * m_in * dc.adjoint();
      walk(depth + 1, m_next, d_next);
    }
  }
};

// One sampled trajectory's score, d/d delta of its log-probability.
double sample_score(const NmrConfig& cfg, const StepOps& ops,
                    const std::vector<double>& gaps, SplitMix64& rng) {
  Mat2 rho = initial_state(cfg.init).rho;
  Mat2 sens = Mat2::Zero();  // d rho / d delta, for the normalized state
  double score = 0.0;
  for (int i = 0; i < cfg.n_steps; ++i) {
    if (gaps[i] > 0.0) {
      const Mat2 r = gap_unitary(cfg.delta, gaps[i]);
      const Mat2 dr = gap_unitary_ddelta(cfg.delta, gaps[i]);
      sens = (dr * rho * r.adjoint() + r * sens * r.adjoint() +
              r * rho * dr.adjoint())
                 .eval();
      rho = (r * rho * r.adjoint()).eval();
    }
    const Mat2 m_plus = ops.c_plus * rho * ops.c_plus.adjoint();
    const double p_plus = std::clamp(m_plus.trace().real(), 0.0, 1.0);
    const bool plus = rng.bernoulli(p_plus);
    const Mat2& c = plus ? ops.c_plus : ops.c_minus;
    const Mat2& dc = plus ? ops.dc_plus : ops.dc_minus;
    const Mat2 m = plus ? m_plus : Mat2(ops.c_minus * rho *
                                        ops.c_minus.adjoint());
    const double p = std::max(m.trace().real(), 1e-300);
    const Mat2 dm =
        dc * rho * c.adjoint() + c * sens * c.adjoint() + c * rho * dc.adjoint();
    const double dp = dm.trace().real();
    score += dp / p;
    rho = m / p;
    sens = (dm - dp * rho) / p;
    rho = 0.5 * (rho + rho.adjoint()).eval();
  }
  return score;
}

}  // namespace

void NmrConfig::validate() const {
  require_finite(g, "g");
  require_finite(delta, "delta");
  require_finite(tau_m, "tau_m");
  require_finite(gap_total, "gap_total");
  if (g < 0.0) throw std::invalid_argument("g must be >= 0");
  if (tau_m <= 0.0) throw std::invalid_argument("tau_m must be > 0");
  if (n_steps < 0) throw std::invalid_argument("n_steps must be >= 0");
  if (gap_total < 0.0) throw std::invalid_argument("gap_total must be >= 0");
}

KrausOperator nmr_kraus(double g, double delta, double tau_m, int outcome) {
  require_finite(g, "g");
  require_finite(delta, "delta");
  require_finite(tau_m, "tau_m");
  if (tau_m <= 0.0) throw std::invalid_argument("tau_m must be > 0");
  if (outcome != +1 && outcome != -1) {
    throw std::invalid_argument("outcome must be +1 or -1");
  }
  const double nk = std::hypot(g, delta);
  const double x = nk * tau_m;
  const double c = std::cos(x);
  const double s = tau_m * sinc(x);  // sin(N tau)/N
  const double inv_sqrt2 = std::sqrt(0.5);
  KrausOperator k;
  k.outcome = outcome;
  k.init_axis = Axis::y;
  k.meas_axis = Axis::x;
  k.m = inv_sqrt2 * (c * Mat2::Identity() - kI * s * delta * pauli_z() +
                     static_cast<double>(outcome) * s * g * pauli_x());
  return k;
}

Mat2 nmr_kraus_ddelta(double g, double delta, double tau_m, int outcome) {
  const double nk = std::hypot(g, delta);
  const double inv_sqrt2 = std::sqrt(0.5);
  if (nk == 0.0) {
    // Limit of d/d delta at g = delta = 0.
    return inv_sqrt2 * (-kI) * tau_m * pauli_z();
  }
  const double x = nk * tau_m;
  const double s_over_n = tau_m * sinc(x);        // sin(N t)/N
  const double dn_ddelta = delta / nk;
  const double dcos = -tau_m * std::sin(x) * dn_ddelta;
  // d/d delta of sin(N t)/N.
  const double dsn = dn_ddelta * (tau_m * std::cos(x) / nk -
                                  std::sin(x) / (nk * nk));
  return inv_sqrt2 *
         (dcos * Mat2::Identity() -
          kI * (s_over_n + delta * dsn) * pauli_z() +
          static_cast<double>(outcome) * g * dsn * pauli_x());
}

NmrStep nmr_step_probabilities(const SpinState& state, const NmrConfig& cfg) {
  cfg.validate();
  const KrausOperator cp = nmr_kraus(cfg.g, cfg.delta, cfg.tau_m, +1);
  const KrausOperator cm = nmr_kraus(cfg.g, cfg.delta, cfg.tau_m, -1);
  const KrausOutcome op = apply_kraus(state, cp);
  const KrausOutcome om = apply_kraus(state, cm);
  NmrStep out;
  out.p_plus = op.probability;
  out.p_minus = om.probability;
  out.post_plus = op.state;
  out.post_minus = om.state;
  return out;
}

std::vector<NmrDynamicsRow> nmr_dynamics(const NmrConfig& cfg) {
  cfg.validate();
  const StepOps ops = step_ops(cfg);
  const std::vector<double> gaps = pre_gaps(cfg);
  SpinState state = initial_state(cfg.init);
  std::vector<NmrDynamicsRow> rows;
  rows.reserve(cfg.n_steps);
  double t = 0.0;
  for (int i = 0; i < cfg.n_steps; ++i) {
    if (gaps[i] > 0.0) {
      const Mat2 r = gap_unitary(cfg.delta, gaps[i]);
      state.rho = (r * state.rho * r.adjoint()).eval();
      t += gaps[i];
    }
    NmrDynamicsRow row;
    row.step = i + 1;
    const Mat2 mp = ops.c_plus * state.rho * ops.c_plus.adjoint();
    row.p_plus = std::clamp(mp.trace().real(), 0.0, 1.0);
    row.p_minus = 1.0 - row.p_plus;
    // Unconditioned channel: average over both outcomes.
    state.rho = (mp + ops.c_minus * state.rho * ops.c_minus.adjoint()).eval();
    state.rehermitize();
    t += cfg.tau_m;
    row.t = t;
    const Eigen::Vector3d bloch = state.bloch();
    row.bloch_x = bloch.x();
    row.bloch_y = bloch.y();
    rows.push_back(row);
  }
  return rows;
}

NmrFisher nmr_fisher(const NmrConfig& cfg, NmrMethod method,
                     std::uint64_t samples, std::uint64_t seed, int threads) {
  cfg.validate();
  NmrFisher out;
  if (cfg.n_steps == 0) return out;
  const StepOps ops = step_ops(cfg);
  const std::vector<double> gaps = pre_gaps(cfg);

  if (method == NmrMethod::enumerate) {
    if (cfg.n_steps > kMaxEnumerationSteps) {
      throw std::invalid_argument("enumeration supports at most 24 steps");
    }
    Enumerator en{ops, gaps, cfg.delta, cfg.n_steps};
    en.walk(0, initial_state(cfg.init).rho, Mat2::Zero());
    out.info = en.fi;
    return out;
  }

  if (samples == 0) throw std::invalid_argument("samples must be > 0");
  const std::uint64_t n_chunks = chunk_count(samples, 512);
  std::vector<double> sum_sq(n_chunks, 0.0);
  std::vector<double> sum_quad(n_chunks, 0.0);
  parallel_chunks(samples, 512, threads,
                  [&](std::uint64_t c, std::uint64_t b, std::uint64_t e) {
                    double s2 = 0.0, s4 = 0.0;
                    for (std::uint64_t i = b; i < e; ++i) {
                      SplitMix64 rng = stream_rng(seed, i);
                      const double s = sample_score(cfg, ops, gaps, rng);
                      s2 += s * s;
                      s4 += s * s * s * s;
                    }
                    sum_sq[c] = s2;
                    sum_quad[c] = s4;
                  });
  double total_sq = 0.0, total_quad = 0.0;
  for (std::uint64_t c = 0; c < n_chunks; ++c) {
    total_sq += sum_sq[c];
    total_quad += sum_quad[c];
  }
  const double m = static_cast<double>(samples);
  out.info = total_sq / m;
  const double var = std::max(0.0, total_quad / m - out.info * out.info);
  out.std_error = std::sqrt(var / m);
  out.samples = samples;
  out.flagged = out.info > 0.0 && out.std_error > 0.25 * out.info;
  return out;
}

double nmr_fisher_weak_closed_form(const NmrConfig& cfg) {
  cfg.validate();
  const std::vector<double> gaps = pre_gaps(cfg);
  const double s2 = std::pow(std::sin(2.0 * cfg.g * cfg.tau_m), 2);
  double t = 0.0;
  double sum = 0.0;
  for (int i = 0; i < cfg.n_steps; ++i) {
    t += gaps[i] + cfg.tau_m;
    const double sd = std::sin(2.0 * cfg.delta * t);
    sum += 4.0 * t * t * s2 * sd * sd;
  }
  return sum;
}

ComparisonReport compare_protocols(std::span<const double> T_grid, double phi,
                                   double tau_m, const DetectorModel* det,
                                   bool polarized, double delta_T_product,
                                   std::uint64_t mc_samples, std::uint64_t seed,
                                   int threads) {
  require_finite(phi, "phi");
  require_finite(tau_m, "tau_m");
  if (tau_m <= 0.0) throw std::invalid_argument("tau_m must be > 0");
  const double g = phi / tau_m;
  ComparisonReport report;
  for (std::size_t i = 0; i < T_grid.size(); ++i) {
    const double T = T_grid[i];
    ProtocolComparisonRow row;
    row.T = T;
    row.chi = g * g * tau_m * T;

    const int n_steps = static_cast<int>(std::floor(T / tau_m + 1e-9));
    if (n_steps >= 1) {
      NmrConfig cfg;
      cfg.g = g;
      cfg.tau_m = tau_m;
      cfg.n_steps = n_steps;
      cfg.delta = delta_T_product / T;
      cfg.init = polarized ? NmrInit::polarized_x : NmrInit::mixed;
      const NmrFisher f =
          (n_steps <= 18)
              ? nmr_fisher(cfg, NmrMethod::enumerate)
              : nmr_fisher(cfg, NmrMethod::monte_carlo, mc_samples,
                           derive_stream(seed, i), threads);
      row.fi_nmr = f.info;
      row.fi_nmr_se = f.std_error;
    }
    if (T > tau_m) {
      row.fi_corr =
          optimize_measurement_count(phi, T, tau_m, det, polarized).fisher.info;
    }
    row.nmr_over_corr = row.fi_corr > 0.0 ? row.fi_nmr / row.fi_corr : 0.0;
    if (!report.crossover_found && row.fi_corr > row.fi_nmr &&
        row.fi_corr > 0.0) {
      report.crossover_T = T;
      report.crossover_found = true;
    }
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace spincorr
