#include "spincorr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "spincorr/core_model.hpp"
#include "spincorr/parallel.hpp"
#include "spincorr/rng.hpp"

namespace spincorr {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr std::size_t kMaxNuclei = 3;

MatX kron(const MatX& a, const MatX& b) {
  MatX out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

// Precomputed operators for one protocol configuration.
struct ProtocolOps {
  MatX k_plus;    // detection Kraus, counted outcome
  MatX k_minus;
  MatX rotation;  // free-rotation unitary for the full rotation period
  Eigen::Index dim = 2;
};

ProtocolOps build_ops(const SimConfig& cfg) {
  const double tau_m = cfg.schedule.tau_m;
  MatX up = MatX::Identity(1, 1);
  MatX um = MatX::Identity(1, 1);
  MatX rot = MatX::Identity(1, 1);
  for (const NucleusParams& p : cfg.nuclei) {
    const double nk = std::hypot(p.g, p.delta);
    const double x = nk * tau_m;
    const double c = std::cos(x);
    const double s = tau_m * sinc(x);
    const Mat2 up_k = c * Mat2::Identity() -
                      kI * s * (p.delta * pauli_z() + p.g * pauli_x());
    const Mat2 um_k = c * Mat2::Identity() -
                      kI * s * (p.delta * pauli_z() - p.g * pauli_x());
    Mat2 rot_k;
    rot_k << std::exp(Complex(0.0, -p.omega * cfg.schedule.tau)), 0.0, 0.0,
        std::exp(Complex(0.0, p.omega * cfg.schedule.tau));
    up = kron(up, MatX(up_k));
    um = kron(um, MatX(um_k));
    rot = kron(rot, MatX(rot_k));
  }
  const Complex ph_m(std::sqrt(0.5), -std::sqrt(0.5));
  const Complex ph_p(std::sqrt(0.5), std::sqrt(0.5));
  ProtocolOps ops;
  ops.k_plus = ph_m * 0.5 * (up + kI * um);
  ops.k_minus = ph_p * 0.5 * (up - kI * um);
  ops.rotation = rot;
  ops.dim = up.rows();
  return ops;
}

int count_positive(std::span<const int> v) {
  return static_cast<int>(std::count_if(v.begin(), v.end(),
                                        [](int o) { return o > 0; }));
}

MeasurementRecord run_protocol_with_ops(const SimConfig& cfg,
                                        const ProtocolOps& ops,
                                        std::uint64_t seed) {
  MeasurementRecord rec;
  rec.schedule = cfg.schedule;
  rec.nuclei = cfg.nuclei;
  rec.detector = cfg.detector;
  rec.seed = seed;
  rec.outcomes.reserve(cfg.schedule.n1 + cfg.schedule.n2);

  SplitMix64 rng(seed);
  MatX rho = MatX::Identity(ops.dim, ops.dim) / static_cast<double>(ops.dim);

  auto measure = [&](int) {
    MatX m_plus = ops.k_plus * rho * ops.k_plus.adjoint();
    const double p_plus =
        std::clamp(m_plus.trace().real(), 0.0, 1.0);
    const int electron = rng.bernoulli(p_plus) ? +1 : -1;
    if (electron > 0) {
      rho = m_plus / std::max(p_plus, 1e-300);
    } else {
      MatX m_minus = ops.k_minus * rho * ops.k_minus.adjoint();
      rho = m_minus / std::max(m_minus.trace().real(), 1e-300);
    }
    rho = 0.5 * (rho + rho.adjoint()).eval();
    if (cfg.detector) {
      const double pp = electron > 0 ? cfg.detector->a : cfg.detector->b;
      rec.outcomes.push_back(rng.bernoulli(pp) ? 1 : 0);
    } else {
      rec.outcomes.push_back(electron);
    }
  };

  for (int j = 0; j < cfg.schedule.n1; ++j) measure(j);
  rho = (ops.rotation * rho * ops.rotation.adjoint()).eval();
  for (int j = 0; j < cfg.schedule.n2; ++j) measure(j);
  return rec;
}

double log_likelihood_impl(const MeasurementRecord& record,
                           std::span<const double> omegas) {
  if (record.nuclei.empty() || omegas.size() != record.nuclei.size()) {
    throw std::invalid_argument(
        "candidate count must match the nucleus count");
  }
  if (static_cast<int>(record.outcomes.size()) !=
      record.schedule.n1 + record.schedule.n2) {
    throw std::invalid_argument("record outcomes inconsistent with schedule");
  }
  SimConfig cfg;
  cfg.nuclei = record.nuclei;
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    require_finite(omegas[i], "omega candidate");
    cfg.nuclei[i].omega = omegas[i];
  }
  cfg.schedule = record.schedule;
  cfg.detector = record.detector;
  cfg.validate();
  const ProtocolOps ops = build_ops(cfg);

  MatX rho = MatX::Identity(ops.dim, ops.dim) / static_cast<double>(ops.dim);
  double loglik = 0.0;
  auto step = [&](int outcome) -> bool {
    MatX m;
    if (record.detector) {
      const MatX mp = ops.k_plus * rho * ops.k_plus.adjoint();
      const MatX mm = ops.k_minus * rho * ops.k_minus.adjoint();
      // Observed photon flag mixes the two electron branches.
      const double wa = outcome == 1 ? record.detector->a
                                     : 1.0 - record.detector->a;
      const double wb = outcome == 1 ? record.detector->b
                                     : 1.0 - record.detector->b;
      m = wa * mp + wb * mm;
    } else {
      const MatX& k = outcome > 0 ? ops.k_plus : ops.k_minus;
      m = k * rho * k.adjoint();
    }
    const double p = m.trace().real();
    if (!(p > 0.0)) return false;
    loglik += std::log(p);
    rho = m / p;
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return true;
  };

  for (int j = 0; j < record.schedule.n1; ++j) {
    if (!step(record.outcomes[j])) {
      return -std::numeric_limits<double>::infinity();
    }
  }
  rho = (ops.rotation * rho * ops.rotation.adjoint()).eval();
  for (int j = 0; j < record.schedule.n2; ++j) {
    if (!step(record.outcomes[record.schedule.n1 + j])) {
      return -std::numeric_limits<double>::infinity();
    }
  }
  return loglik;
}

}  // namespace

int MeasurementRecord::k1() const {
  return count_positive(
      std::span<const int>(outcomes.data(), schedule.n1));
}

int MeasurementRecord::k2() const {
  return count_positive(
      std::span<const int>(outcomes.data() + schedule.n1, schedule.n2));
}

void SimConfig::validate() const {
  if (nuclei.empty()) throw std::invalid_argument("need at least one nucleus");
  if (nuclei.size() > kMaxNuclei) {
    throw std::invalid_argument("at most 3 nuclei are supported");
  }
  for (const auto& p : nuclei) p.validate();
  schedule.validate();
  if (detector) detector->validate();
}

MeasurementRecord run_protocol(const SimConfig& config, std::uint64_t seed) {
  config.validate();
  return run_protocol_with_ops(config, build_ops(config), seed);
}

RecordBatch run_batch(const SimConfig& config, std::uint64_t shots,
                      std::uint64_t master_seed, int threads) {
  config.validate();
  if (shots == 0) throw std::invalid_argument("shots must be > 0");
  const ProtocolOps ops = build_ops(config);

  RecordBatch batch;
  batch.config = config;
  batch.master_seed = master_seed;
  batch.records.resize(shots);
  parallel_chunks(shots, 256, threads,
                  [&](std::uint64_t, std::uint64_t b, std::uint64_t e) {
                    for (std::uint64_t s = b; s < e; ++s) {
                      batch.records[s] = run_protocol_with_ops(
                          config, ops, derive_stream(master_seed, s));
                    }
                  });

  BatchStats& st = batch.stats;
  st.shots = shots;
  double sum_k1 = 0.0, sum_k2 = 0.0, same = 0.0;
  for (const auto& r : batch.records) {
    sum_k1 += r.k1();
    sum_k2 += r.k2();
    if (config.schedule.n1 == 1 && config.schedule.n2 == 1) {
      same += (r.outcomes[0] == r.outcomes[1]) ? 1.0 : 0.0;
    }
  }
  st.mean_k1 = sum_k1 / static_cast<double>(shots);
  st.mean_k2 = sum_k2 / static_cast<double>(shots);
  if (config.schedule.n1 == 1 && config.schedule.n2 == 1) {
    st.p_same_defined = true;
    st.p_same = same / static_cast<double>(shots);
    st.p_same_ci95 = 1.96 * std::sqrt(std::max(
        st.p_same * (1.0 - st.p_same) / static_cast<double>(shots), 0.0));
  }
  return batch;
}

double log_likelihood_of_record(const MeasurementRecord& record,
                                double omega_candidate) {
  if (record.nuclei.size() != 1) {
    throw std::invalid_argument(
        "scalar candidate requires a single-nucleus record");
  }
  return log_likelihood_impl(record, std::span<const double>(&omega_candidate, 1));
}

double log_likelihood_of_record(const MeasurementRecord& record,
                                std::span<const double> omega_candidates) {
  return log_likelihood_impl(record, omega_candidates);
}

void write_records(std::ostream& os, const RecordBatch& batch) {
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  os << "#spincorr-records v1\n";
  os << "#schedule " << batch.config.schedule.n1 << " "
     << batch.config.schedule.n2 << " " << fmt(batch.config.schedule.tau_m)
     << " " << fmt(batch.config.schedule.tau) << "\n";
  for (const auto& p : batch.config.nuclei) {
    os << "#nucleus " << fmt(p.g) << " " << fmt(p.delta) << " " << fmt(p.omega)
       << "\n";
  }
  if (batch.config.detector) {
    os << "#detector " << fmt(batch.config.detector->a) << " "
       << fmt(batch.config.detector->b) << "\n";
  }
  os << "#master_seed " << batch.master_seed << "\n";
  for (std::size_t i = 0; i < batch.records.size(); ++i) {
    const auto& r = batch.records[i];
    os << "R " << i << " " << r.seed;
    for (int o : r.outcomes) {
      if (batch.config.detector) {
        os << " " << (o == 1 ? '1' : '0');
      } else {
        os << " " << (o > 0 ? '+' : '-');
      }
    }
    os << "\n";
  }
}

RecordBatch read_records(std::istream& is) {
  RecordBatch batch;
  std::string line;
  bool have_header = false, have_schedule = false, have_seed = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    if (line[0] == '#') {
      std::string tag;
      ss >> tag;
      if (tag == "#spincorr-records") {
        have_header = true;
      } else if (tag == "#schedule") {
        ss >> batch.config.schedule.n1 >> batch.config.schedule.n2 >>
            batch.config.schedule.tau_m >> batch.config.schedule.tau;
        have_schedule = true;
      } else if (tag == "#nucleus") {
        NucleusParams p;
        ss >> p.g >> p.delta >> p.omega;
        batch.config.nuclei.push_back(p);
      } else if (tag == "#detector") {
        DetectorModel d;
        ss >> d.a >> d.b;
        batch.config.detector = d;
      } else if (tag == "#master_seed") {
        ss >> batch.master_seed;
        have_seed = true;
      } else {
        throw ConfigError("unknown record header line: " + line);
      }
      if (ss.fail()) throw ConfigError("malformed record header: " + line);
      continue;
    }
    std::string tag;
    std::size_t index;
    ss >> tag >> index;
    if (tag != "R" || ss.fail()) {
      throw ConfigError("malformed record line: " + line);
    }
    MeasurementRecord rec;
    rec.schedule = batch.config.schedule;
    rec.nuclei = batch.config.nuclei;
    rec.detector = batch.config.detector;
    ss >> rec.seed;
    std::string tok;
    while (ss >> tok) {
      if (tok == "+") {
        rec.outcomes.push_back(+1);
      } else if (tok == "-") {
        rec.outcomes.push_back(-1);
      } else if (tok == "1") {
        rec.outcomes.push_back(1);
      } else if (tok == "0") {
        rec.outcomes.push_back(0);
      } else {
        throw ConfigError("unknown outcome token: " + tok);
      }
    }
    const int expected = rec.schedule.n1 + rec.schedule.n2;
    if (static_cast<int>(rec.outcomes.size()) != expected) {
      throw ConfigError("record outcome count does not match schedule");
    }
    batch.records.push_back(std::move(rec));
  }
  if (!have_header || !have_schedule || !have_seed ||
      batch.config.nuclei.empty()) {
    throw ConfigError("incomplete record file header");
  }
  batch.config.validate();
  return batch;
}

}  // namespace spincorr
