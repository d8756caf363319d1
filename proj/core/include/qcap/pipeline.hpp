#pragma once

#include <map>
#include <string>
#include <vector>

#include "qcap/capability.hpp"
#include "qcap/device.hpp"
#include "qcap/erm.hpp"
#include "qcap/metrics.hpp"
#include "qcap/mirror.hpp"
#include "qcap/nn_search.hpp"
#include "qcap/noise.hpp"

namespace qcap {

struct SamplerSpec {
  std::string kind = "randomized";  // "randomized" | "periodic"
  std::vector<int> widths{5};
  std::vector<int> depths{4};
  double xi = 0.125;
  int count = 0;
  int germ_length = 4;  // periodic only; snapped to a divisor of depth/2
};

struct ModelSpec {
  // "biased-lps" | "uniform-lps" | "growing-pains" | "double-trouble" |
  // "coherent" | "file"
  std::string variant = "biased-lps";
  uint64_t seed = 0;       // 0: derive from the master seed
  double max_1q = 0.0025;  // biased-lps
  double max_2q = 0.01;
  double hi = 1e-4;  // uniform-rate variants
  double infidelity = 0.05;
  double gp_max_ratio = 9.0;
  double gp_tau = 1.0 / 350.0;
  double dt_add = 0.005;
  std::string file;  // variant == "file"
};

struct SelectionSpec {
  std::string mode = "cnn";  // "cnn" | "erm-fit" | "erm-load"
  SearchSpace space;
  int budget = 3;
  std::string erm_file;  // erm-load
};

struct ExperimentConfig {
  std::string device = "t5";  // builtin (t5, grid3x3, grid7x7) or a file path
  SamplerSpec sampler;
  ModelSpec model;
  long n_shots = 0;  // 0 = infinite
  SplitFractions splits;
  std::vector<size_t> subset_sizes;  // nested train+validate sizes; empty = full only
  SelectionSpec selection;
  int d_max = 0;  // 0: deepest sampled circuit
  std::string out_dir;
  uint64_t master_seed = 1;
  int jobs = 1;
};

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);

DeviceGraph resolve_device(const std::string& name_or_path);
ErrorModel resolve_model(const ModelSpec& spec, const DeviceGraph& dev, uint64_t master_seed);

// Exclusive advisory lock on an output directory (lock file created
// O_EXCL); a second concurrent holder gets a ConfigError.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::string& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::string path_;
};

struct SampledCircuits {
  std::vector<Circuit> circuits;
  std::vector<std::string> kinds;  // "rmc" | "pmc"
};

// Pure function of (device, spec, rng): width and depth drawn uniformly
// from the grids, active qubits a random connected subset.
SampledCircuits sample_circuit_set(const DeviceGraph& dev, const SamplerSpec& spec,
                                   const Rng& rng);

// Same records relabelled with fresh shot noise at the given shot count.
CapabilityDataset with_shot_noise(const CapabilityDataset& ds, long n_shots, const Rng& rng);

// Tensors plus s_hat labels for one split, encoded at d_max (optionally
// with the sensitivity channels stripped).
struct EncodedSplit {
  std::vector<Tensor3> xs;
  std::vector<double> ys;
  std::vector<std::string> ids;
};
EncodedSplit encode_split(const CapabilityDataset& ds, const std::string& split, int d_max,
                          bool strip = false);

// Commands. Each writes its artifacts plus manifest.json (master seed and
// content hashes of inputs/outputs) into cfg.out_dir. Reruns with identical
// inputs are byte-identical; wall-clock timing goes to run.log only.
void cmd_sample(const ExperimentConfig& cfg);
void cmd_simulate(const ExperimentConfig& cfg);
void cmd_train(const ExperimentConfig& cfg);
void cmd_evaluate(const std::string& model_path, const std::string& dataset_path,
                  const std::string& out_dir, const std::string& split, int jobs = 1,
                  bool out_of_distribution = false, const std::string& format = "csv");
void cmd_sbm(const std::string& pass1_path, const std::string& pass2_path,
             const std::string& out_dir, const std::string& format = "csv");

enum class RunProfile { Desk, Smoke };

// Numbers the acceptance checks read, keyed by stable names, plus the
// artifact files written (relative to the preset's output directory).
struct PresetOutcome {
  std::map<std::string, double> values;
  std::vector<std::string> artifacts;
};

PresetOutcome preset_5q_lps(const std::string& out_dir, uint64_t seed, RunProfile profile,
                            int jobs = 1);
// variant: "growing-pains" | "double-trouble"
PresetOutcome preset_nonmarkovian(const std::string& out_dir, uint64_t seed,
                                  const std::string& variant, RunProfile profile, int jobs = 1);
PresetOutcome preset_coherent(const std::string& out_dir, uint64_t seed, RunProfile profile,
                              int jobs = 1);
// reuse_dir: a finished preset-5q-lps directory to borrow the parent
// dataset and tuned architecture from (empty: self-contained).
PresetOutcome preset_ablation(const std::string& out_dir, uint64_t seed, RunProfile profile,
                              int jobs = 1, const std::string& reuse_dir = "");
PresetOutcome preset_ood(const std::string& out_dir, uint64_t seed, RunProfile profile,
                         int jobs = 1, const std::string& reuse_dir = "");

// Rank correlation used by the learning-curve trend check.
double spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace qcap
