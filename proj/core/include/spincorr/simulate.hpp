#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "spincorr/types.hpp"

namespace spincorr {

// One full protocol run. Outcomes are stored in measurement order: +1/-1
// electron readouts, or 1/0 photon flags when a detector model is present.
struct MeasurementRecord {
  ProtocolSchedule schedule;
  std::vector<NucleusParams> nuclei;
  std::optional<DetectorModel> detector;
  std::uint64_t seed = 0;
  std::vector<int> outcomes;

  int k1() const;  // counted outcomes (positive/photon) in the first period
  int k2() const;  // counted outcomes in the second period
};

struct SimConfig {
  std::vector<NucleusParams> nuclei;
  ProtocolSchedule schedule;
  std::optional<DetectorModel> detector;

  void validate() const;
};

MeasurementRecord run_protocol(const SimConfig& config, std::uint64_t seed);

struct BatchStats {
  std::uint64_t shots = 0;
  double p_same = 0.0;      // same-outcome fraction (n1 = n2 = 1 only)
  double p_same_ci95 = 0.0;
  bool p_same_defined = false;
  double mean_k1 = 0.0;
  double mean_k2 = 0.0;
};

struct RecordBatch {
  SimConfig config;
  std::uint64_t master_seed = 0;
  std::vector<MeasurementRecord> records;
  BatchStats stats;
};

// Per-shot seeds are derived from the master seed by counter, so the batch is
// reproducible bit-for-bit for any thread count.
RecordBatch run_batch(const SimConfig& config, std::uint64_t shots,
                      std::uint64_t master_seed, int threads = 1);

// Exact log-probability of the recorded outcome sequence when the
// rotation-period detuning of the single nucleus is omega_candidate.
// Returns -inf for a zero-probability record.
double log_likelihood_of_record(const MeasurementRecord& record,
                                double omega_candidate);

// Multi-nucleus variant; omega_candidates must match the nucleus count.
double log_likelihood_of_record(const MeasurementRecord& record,
                                std::span<const double> omega_candidates);

void write_records(std::ostream& os, const RecordBatch& batch);
RecordBatch read_records(std::istream& is);

}  // namespace spincorr
