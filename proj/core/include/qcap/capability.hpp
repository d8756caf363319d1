#pragma once

#include <string>
#include <vector>

#include "qcap/circuit.hpp"
#include "qcap/device.hpp"
#include "qcap/noise.hpp"
#include "qcap/rng.hpp"

namespace qcap {

// No-cancellation product: every Pauli error at a sensitive location flips
// the outcome, so s = prod over sensitive (location, axis) of (1 - rate),
// times the readout factors of the active qubits. Stochastic models only.
double analytic_success_probability(const Circuit& c, const ErrorModel& m);

struct McEstimate {
  double s = 0.0;
  double stderr_ = 0.0;
  long trials = 0;
};

// Pauli-frame sampling; exact in the trial limit, including error
// cancellation the analytic product ignores. Deterministic for a given base
// rng (each trial derives its own child stream) and invariant to jobs.
McEstimate monte_carlo_success_probability(const Circuit& c, const ErrorModel& m, long trials,
                                           const Rng& base, int jobs = 1);

// |<x_s| noisy U |0>|^2 with the model's unitary errors interleaved after
// each gate. Coherent models only; width capped at 12.
double statevector_success_probability(const Circuit& c, const ErrorModel& m);

// Binomial(n_shots, s)/n_shots; n_shots == 0 means infinite (returns s).
double add_shot_noise(double s, long n_shots, Rng& rng);

struct CapabilityRecord {
  std::string id;
  std::string kind;  // "rmc" | "pmc"
  std::string split; // "train" | "validate" | "test"
  Circuit circuit;
  double s = -1.0;      // model success probability before shot noise
  double s_hat = -1.0;  // label after shot noise
  long n_shots = 0;     // 0 = infinite
};

struct CapabilityDataset {
  DeviceGraph device;
  uint64_t master_seed = 0;
  std::string model_hash;
  int d_max = 0;
  std::vector<CapabilityRecord> records;

  std::vector<size_t> split_indices(const std::string& split) const;
};

struct SplitFractions {
  double train = 0.7, validate = 0.2, test = 0.1;
};

// Label every circuit with the model (analytic for stochastic, statevector
// for coherent), apply shot noise, and assign splits by a seeded shuffle
// with largest-remainder rounding of the fractions.
CapabilityDataset build_dataset(const DeviceGraph& dev, const std::vector<Circuit>& circuits,
                                const std::vector<std::string>& kinds, const ErrorModel& m,
                                long n_shots, const SplitFractions& fractions, const Rng& rng,
                                int jobs = 1);

// Smaller dataset with the requested per-split sizes, preserving split
// membership. Selections are prefixes of a per-split seeded shuffle, so for
// fixed rng the subsets are nested across sizes.
CapabilityDataset subsample_nested(const CapabilityDataset& ds, size_t n_train, size_t n_validate,
                                   size_t n_test, const Rng& rng);

// Per-split counts under largest-remainder rounding (exposed for tests).
std::vector<size_t> split_counts(size_t n, const SplitFractions& fractions);

std::string dataset_to_jsonl(const CapabilityDataset& ds);
CapabilityDataset dataset_from_jsonl(const std::string& text);
void save_dataset(const CapabilityDataset& ds, const std::string& path);
CapabilityDataset load_dataset(const std::string& path);

}  // namespace qcap
