#include "spincorr/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "spincorr/analytic.hpp"
#include "spincorr/fisher.hpp"
#include "spincorr/parallel.hpp"
#include "spincorr/rng.hpp"

namespace spincorr {

namespace {

constexpr double kFlatLikelihoodTol = 1e-9;

double joint_order_probability(const TrajectoryWeight& w1,
                               const TrajectoryWeight& w2, double omega,
                               double tau) {
  const double c2 = std::pow(std::cos(omega * tau), 2);
  return 0.5 * c2 * (w1.c * w2.c + w1.d * w2.d) +
         0.5 * (1.0 - c2) * (w1.c * w2.d + w1.d * w2.c);
}

// Sufficient-statistic likelihood: for a shared single-nucleus configuration
// with delta = 0, the record probability depends only on (k1, k2), so the
// grid scan works from per-(k1, k2) counts.
struct CountTable {
  std::map<std::pair<int, int>, std::uint64_t> counts;
  ProtocolSchedule schedule;
  double phi = 0.0;
  std::optional<DetectorModel> detector;
};

bool fast_path_applicable(std::span<const MeasurementRecord> records) {
  if (records.empty()) return false;
  const MeasurementRecord& first = records.front();
  if (first.nuclei.size() != 1 || first.nuclei[0].delta != 0.0) return false;
  for (const auto& r : records) {
    if (r.nuclei.size() != 1 || r.nuclei[0].g != first.nuclei[0].g ||
        r.nuclei[0].delta != 0.0 ||
        r.schedule.n1 != first.schedule.n1 ||
        r.schedule.n2 != first.schedule.n2 ||
        r.schedule.tau_m != first.schedule.tau_m ||
        r.schedule.tau != first.schedule.tau ||
        r.detector.has_value() != first.detector.has_value()) {
      return false;
    }
    if (r.detector &&
        (r.detector->a != first.detector->a || r.detector->b != first.detector->b)) {
      return false;
    }
  }
  return true;
}

CountTable build_counts(std::span<const MeasurementRecord> records) {
  CountTable t;
  t.schedule = records.front().schedule;
  t.phi = records.front().nuclei[0].g * t.schedule.tau_m;
  t.detector = records.front().detector;
  for (const auto& r : records) {
    ++t.counts[{r.k1(), r.k2()}];
  }
  return t;
}

double count_log_likelihood(const CountTable& t, double omega) {
  double ll = 0.0;
  for (const auto& [kk, cnt] : t.counts) {
    TrajectoryWeight w1, w2;
    if (t.detector) {
      w1 = imperfect_trajectory_weights(t.schedule.n1, kk.first, t.phi,
                                        *t.detector);
      w2 = imperfect_trajectory_weights(t.schedule.n2, kk.second, t.phi,
                                        *t.detector);
    } else {
      w1 = trajectory_weights(t.schedule.n1, kk.first, t.phi);
      w2 = trajectory_weights(t.schedule.n2, kk.second, t.phi);
    }
    const double p = joint_order_probability(w1, w2, omega, t.schedule.tau);
    if (!(p > 0.0)) return -std::numeric_limits<double>::infinity();
    ll += static_cast<double>(cnt) * std::log(p);
  }
  return ll;
}

double golden_refine(const std::function<double(double)>& f, double lo,
                     double hi, double* best_x, double* best_f) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - gr * (b - a);
  double x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-13 * std::max(1.0, std::abs(b));
       ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    }
  }
  const double xm = 0.5 * (a + b);
  const double fm = f(xm);
  if (fm > *best_f) {
    *best_f = fm;
    *best_x = xm;
  }
  return *best_x;
}

}  // namespace

void GridSpec::validate() const {
  require_finite(lo, "grid lo");
  require_finite(hi, "grid hi");
  require_finite(step, "grid step");
  if (!(hi > lo)) throw std::invalid_argument("grid needs hi > lo");
  if (!(step > 0.0)) throw std::invalid_argument("grid needs step > 0");
}

MleResult maximize_on_grid(const std::function<double(double)>& log_lik,
                           const GridSpec& grid) {
  grid.validate();
  const std::int64_t points =
      static_cast<std::int64_t>(std::floor((grid.hi - grid.lo) / grid.step)) +
      1;
  double best_x = grid.lo;
  double best_f = -std::numeric_limits<double>::infinity();
  double worst_f = std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i < points; ++i) {
    const double x = grid.lo + static_cast<double>(i) * grid.step;
    const double f = log_lik(x);
    if (f > best_f) {
      best_f = f;
      best_x = x;
    }
    worst_f = std::min(worst_f, f);
  }
  MleResult out;
  if (!(best_f - worst_f > kFlatLikelihoodTol)) {
    out.identifiable = false;
    out.estimate = std::numeric_limits<double>::quiet_NaN();
    out.log_likelihood = best_f;
    return out;
  }
  const double lo = std::max(grid.lo, best_x - grid.step);
  const double hi = std::min(grid.hi, best_x + grid.step);
  golden_refine(log_lik, lo, hi, &best_x, &best_f);
  out.estimate = best_x;
  out.log_likelihood = best_f;
  return out;
}

MleResult mle_frequency(std::span<const MeasurementRecord> records,
                        const GridSpec& grid) {
  if (records.empty()) throw std::invalid_argument("no records");
  if (fast_path_applicable(records)) {
    const CountTable t = build_counts(records);
    return maximize_on_grid(
        [&](double omega) { return count_log_likelihood(t, omega); }, grid);
  }
  return maximize_on_grid(
      [&](double omega) {
        double ll = 0.0;
        for (const auto& r : records) {
          ll += log_likelihood_of_record(r, omega);
          if (std::isinf(ll)) break;
        }
        return ll;
      },
      grid);
}

Histogram make_histogram(std::span<const double> values) {
  Histogram h;
  if (values.empty()) return h;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  const std::size_t n = sorted.size();
  const double q1 = sorted[n / 4];
  const double q3 = sorted[(3 * n) / 4];
  double width = 2.0 * (q3 - q1) / std::cbrt(static_cast<double>(n));
  if (!(width > 0.0)) width = std::max(hi - lo, 1.0);
  std::size_t bins = static_cast<std::size_t>(
      std::max(1.0, std::ceil((hi - lo) / width)));
  bins = std::min<std::size_t>(bins, 10000);
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    h.edges[i] = lo + (hi - lo) * static_cast<double>(i) /
                          static_cast<double>(bins);
  }
  h.counts.assign(bins, 0);
  for (double v : sorted) {
    std::size_t idx = bins - 1;
    if (hi > lo) {
      idx = std::min<std::size_t>(
          bins - 1,
          static_cast<std::size_t>((v - lo) / (hi - lo) * bins));
    }
    ++h.counts[idx];
  }
  return h;
}

CrbCheck crb_check(const CrbConfig& cfg, std::uint64_t shots_per_experiment,
                   std::uint64_t experiments, std::uint64_t master_seed,
                   int threads) {
  cfg.sim.validate();
  cfg.grid.validate();
  if (shots_per_experiment == 0 || experiments == 0) {
    throw std::invalid_argument("need shots and experiments > 0");
  }
  CrbCheck out;
  out.estimates.assign(experiments, 0.0);
  parallel_chunks(
      experiments, 8, threads,
      [&](std::uint64_t, std::uint64_t b, std::uint64_t e) {
        for (std::uint64_t i = b; i < e; ++i) {
          const RecordBatch batch =
              run_batch(cfg.sim, shots_per_experiment,
                        derive_stream(master_seed, i), 1);
          const MleResult r = mle_frequency(batch.records, cfg.grid);
          out.estimates[i] =
              r.identifiable ? r.estimate
                             : std::numeric_limits<double>::quiet_NaN();
        }
      });

  double mean = 0.0;
  std::uint64_t valid = 0;
  for (double v : out.estimates) {
    if (std::isfinite(v)) {
      mean += v;
      ++valid;
    }
  }
  if (valid < 2) throw NumericalError("too few identifiable experiments");
  mean /= static_cast<double>(valid);
  double var = 0.0;
  for (double v : out.estimates) {
    if (std::isfinite(v)) var += (v - mean) * (v - mean);
  }
  var /= static_cast<double>(valid - 1);
  out.mean_estimate = mean;
  out.empirical_variance = var;

  const NucleusParams& p = cfg.sim.nuclei[0];
  const double T = cfg.sim.schedule.total_time();
  const double phi = p.g * cfg.sim.schedule.tau_m;
  const DetectorModel* det =
      cfg.sim.detector ? &cfg.sim.detector.value() : nullptr;
  const FisherResult fi =
      fisher_unpolarized(cfg.sim.schedule.n1, cfg.sim.schedule.n2, phi,
                         p.omega, T, cfg.sim.schedule.tau_m,
                         /*optimize_phase=*/false, det);
  if (fi.info <= 0.0) throw NumericalError("zero Fisher information");
  out.predicted_variance =
      1.0 / (static_cast<double>(shots_per_experiment) * fi.info);
  out.ratio = out.empirical_variance / out.predicted_variance;

  // Bootstrap CI over experiments.
  const int B = 200;
  std::vector<double> ratios;
  ratios.reserve(B);
  for (int bi = 0; bi < B; ++bi) {
    SplitMix64 rng = stream_rng(master_seed, 0xB00B5ULL + bi);
    double m = 0.0;
    std::vector<double> sample;
    sample.reserve(valid);
    for (std::uint64_t i = 0; i < experiments; ++i) {
      const double v =
          out.estimates[rng.next() % experiments];
      if (std::isfinite(v)) {
        sample.push_back(v);
        m += v;
      }
    }
    if (sample.size() < 2) continue;
    m /= static_cast<double>(sample.size());
    double vv = 0.0;
    for (double v : sample) vv += (v - m) * (v - m);
    vv /= static_cast<double>(sample.size() - 1);
    ratios.push_back(vv / out.predicted_variance);
  }
  std::sort(ratios.begin(), ratios.end());
  if (!ratios.empty()) {
    out.ratio_ci_lo = ratios[static_cast<std::size_t>(0.025 * ratios.size())];
    out.ratio_ci_hi = ratios[std::min(
        ratios.size() - 1, static_cast<std::size_t>(0.975 * ratios.size()))];
  }
  return out;
}

TwoFrequencyScan resolve_two_frequencies(
    std::span<const MeasurementRecord> records, const GridSpec& grid) {
  grid.validate();
  if (records.empty()) throw std::invalid_argument("no records");
  for (const auto& r : records) {
    if (r.nuclei.size() != 2 || r.schedule.n1 != 1 || r.schedule.n2 != 1) {
      throw std::invalid_argument(
          "two-frequency scan needs two-nucleus records with n1 = n2 = 1");
    }
  }
  const double tau = records.front().schedule.tau;
  const double phi1 =
      records.front().nuclei[0].g * records.front().schedule.tau_m;
  const double phi2 =
      records.front().nuclei[1].g * records.front().schedule.tau_m;
  std::uint64_t same = 0;
  for (const auto& r : records) {
    if (r.outcomes[0] == r.outcomes[1]) ++same;
  }
  const std::uint64_t diff = records.size() - same;

  const std::int64_t points =
      static_cast<std::int64_t>(std::floor((grid.hi - grid.lo) / grid.step)) +
      1;
  TwoFrequencyScan best;
  best.log_likelihood = -std::numeric_limits<double>::infinity();
  const double phis[2] = {phi1, phi2};
  for (std::int64_t i = 0; i < points; ++i) {
    const double w1 = grid.lo + static_cast<double>(i) * grid.step;
    for (std::int64_t j = i; j < points; ++j) {
      const double w2 = grid.lo + static_cast<double>(j) * grid.step;
      const double omegas[2] = {w1, w2};
      const double p_same =
          std::clamp(multi_weak_correlation(phis, omegas, tau, +1).p,
                     1e-12, 1.0 - 1e-12);
      const double ll = static_cast<double>(same) * std::log(p_same) +
                        static_cast<double>(diff) * std::log1p(-p_same);
      if (ll > best.log_likelihood) {
        best =
            TwoFrequencyScan{std::min(w1, w2), std::max(w1, w2), ll};
      }
    }
  }
  return best;
}

}  // namespace spincorr
