#pragma once

#include <cstdint>
#include <vector>

#include "spincorr/core_model.hpp"
#include "spincorr/types.hpp"

namespace spincorr {

enum class NmrInit { polarized_x, polarized_y, mixed };
enum class GapMode { none, uniform, centered };

// Consecutive-measurement protocol: n_steps weak measurements of duration
// tau_m each, fixed detuning delta throughout. Optional free-evolution gaps
// add up to gap_total, placed per gap_mode.
struct NmrConfig {
  double g = 0.0;
  double delta = 0.0;
  double tau_m = 0.0;
  int n_steps = 0;
  NmrInit init = NmrInit::polarized_x;
  double gap_total = 0.0;
  GapMode gap_mode = GapMode::none;

  double total_time() const { return n_steps * tau_m + gap_total; }
  void validate() const;
};

// Per-step nuclear update operator for one electron outcome:
//   C_+- = (1/sqrt 2)[cos(N tau_m) - i sin(N tau_m)(delta/N) I_z
//                     +- sin(N tau_m)(g/N) I_x].
KrausOperator nmr_kraus(double g, double delta, double tau_m, int outcome);

// d C / d delta, for the exact likelihood-gradient recursions.
Mat2 nmr_kraus_ddelta(double g, double delta, double tau_m, int outcome);

struct NmrStep {
  double p_plus = 0.5;
  double p_minus = 0.5;
  SpinState post_plus;
  SpinState post_minus;
};

NmrStep nmr_step_probabilities(const SpinState& state, const NmrConfig& cfg);

struct NmrDynamicsRow {
  int step = 0;
  double t = 0.0;
  double p_plus = 0.5;
  double p_minus = 0.5;
  double bloch_x = 0.0;
  double bloch_y = 0.0;
};

// Outcome-averaged trajectory: probabilities each step under the
// unconditioned (deterministic) channel.
std::vector<NmrDynamicsRow> nmr_dynamics(const NmrConfig& cfg);

enum class NmrMethod { enumerate, monte_carlo };

struct NmrFisher {
  double info = 0.0;
  double std_error = 0.0;  // zero for enumeration
  std::uint64_t samples = 0;
  bool flagged = false;  // Monte Carlo error too large to be conclusive
};

NmrFisher nmr_fisher(const NmrConfig& cfg, NmrMethod method,
                     std::uint64_t samples = 100000, std::uint64_t seed = 0,
                     int threads = 1);

// Weak-backaction reference: sum over measurement times of
// 4 t^2 sin^2(2 g tau_m) sin^2(2 delta t).
double nmr_fisher_weak_closed_form(const NmrConfig& cfg);

struct ProtocolComparisonRow {
  double T = 0.0;
  double chi = 0.0;  // g^2 tau_m T
  double fi_nmr = 0.0;
  double fi_nmr_se = 0.0;
  double fi_corr = 0.0;
  double nmr_over_corr = 0.0;
};

struct ComparisonReport {
  std::vector<ProtocolComparisonRow> rows;
  double crossover_T = 0.0;  // first grid T where the correlation scheme wins
  bool crossover_found = false;
};

// Correlation protocol (measurement count optimized) vs consecutive
// measurements over a total-time grid; delta is chosen as delta_T_product / T
// at every grid point.
ComparisonReport compare_protocols(std::span<const double> T_grid, double phi,
                                   double tau_m, const DetectorModel* det,
                                   bool polarized, double delta_T_product,
                                   std::uint64_t mc_samples, std::uint64_t seed,
                                   int threads = 1);

}  // namespace spincorr
