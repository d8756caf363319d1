#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qcap/capability.hpp"
#include "qcap/circuit.hpp"
#include "qcap/device.hpp"
#include "qcap/errors.hpp"
#include "qcap/mirror.hpp"
#include "qcap/noise.hpp"
#include "qcap/rng.hpp"
#include "qcap/tableau.hpp"

using namespace qcap;
namespace fs = std::filesystem;

namespace {

Circuit mirror(const DeviceGraph& dev, std::vector<int> qubits, int depth, uint64_t seed) {
  SamplerConfig cfg;
  cfg.qubits = std::move(qubits);
  cfg.depth = depth;
  Rng rng(seed);
  return sample_randomized_mirror_circuit(dev, cfg, rng);
}

// Exhaustive oracle over all error assignments. Each noisy (layer, slot)
// location is a 4-way categorical (X, Y, Z, none); an error fires after its
// layer's gates, so it propagates through the remaining layers. Success
// means the net propagated x-mask is cancelled exactly by readout flips.
struct OracleLocation {
  int layer, slot;
  PauliTriple t;
};

double enumerate_success(const Circuit& c, const ErrorModel& m) {
  std::vector<OracleLocation> locs;
  for (int l = 0; l < c.depth(); ++l)
    for (int s = 0; s < c.width(); ++s) {
      const PauliTriple t = effective_triple(m, c, l, s);
      if (t.total() > 0.0) locs.push_back({l, s, t});
    }
  REQUIRE(locs.size() <= 9);

  std::vector<double> readout;
  for (int q : c.active)
    readout.push_back(q < static_cast<int>(m.rates.readout.size())
                          ? m.rates.readout[static_cast<size_t>(q)]
                          : 0.0);

  double total = 0.0;
  size_t assignments = 1;
  for (size_t i = 0; i < locs.size(); ++i) assignments *= 4;
  for (size_t a = 0; a < assignments; ++a) {
    double prob = 1.0;
    uint64_t xmask = 0;
    size_t code = a;
    for (const auto& loc : locs) {
      const int choice = static_cast<int>(code % 4);
      code /= 4;
      if (choice == 0) {
        prob *= 1.0 - loc.t.total();
      } else {
        prob *= loc.t.component(choice);
        PauliString p = PauliString::single(c.width(), loc.slot, choice);
        const PauliString moved = propagate_pauli(c, p, loc.layer + 1);
        xmask ^= moved.x;
      }
    }
    if (prob == 0.0) continue;
    double readout_factor = 1.0;
    for (int s = 0; s < c.width(); ++s) {
      const bool flipped = (xmask >> s) & 1;
      readout_factor *= flipped ? readout[static_cast<size_t>(s)]
                                : 1.0 - readout[static_cast<size_t>(s)];
    }
    total += prob * readout_factor;
  }
  return total;
}

}  // namespace

TEST_CASE("analytic product on hand-checked one-qubit cases") {
  const DeviceGraph dev = grid_device(1, 2);
  Circuit c;
  c.n_device = 2;
  c.active = {0};
  c.layers.push_back({Gate::xp()});
  c.layers.push_back({Gate::xm()});

  ErrorModel m;
  m.rates.one_qubit[{static_cast<int>(GateClass::Xp), 0}] = PauliTriple{0.02, 0.03, 0.05};
  m.rates.one_qubit[{static_cast<int>(GateClass::Xm), 0}] = PauliTriple{0.0, 0.0, 0.0};
  m.rates.readout = {0.01, 0.0};

  // After Xp the state is a Y eigenstate: X and Z errors flip the outcome, Y
  // is harmless. After Xm the state is |0>: only X and Y flip it, but that
  // gate's rates are zero. Readout multiplies in once for the active qubit.
  // The product treats each sensitive component as an independent factor.
  const double expect = (1 - 0.02) * (1 - 0.05) * (1 - 0.01);
  CHECK(analytic_success_probability(c, m) == doctest::Approx(expect).epsilon(1e-12));

  // The oracle draws one Pauli per location (mutually exclusive) and lets a
  // readout error flip a corrupted qubit back; the product formula ignores
  // both effects, which are second order in the rates.
  const double exclusive = (1 - 0.02 - 0.05) * (1 - 0.01) + (0.02 + 0.05) * 0.01;
  CHECK(enumerate_success(c, m) == doctest::Approx(exclusive).epsilon(1e-12));
}

TEST_CASE("monte carlo captures cancellation the product ignores") {
  const DeviceGraph dev = grid_device(1, 2);
  Circuit c;
  c.n_device = 2;
  c.active = {0};
  c.layers.push_back({Gate::zrot(kPi)});
  c.layers.push_back({Gate::zrot(kPi)});

  ErrorModel m;
  m.rates.one_qubit[{static_cast<int>(GateClass::ZRot), 0}] = PauliTriple{0.3, 0.0, 0.0};
  m.rates.readout = {0.0, 0.0};

  // Both X locations are sensitive, but firing both restores the state.
  const double exact = 0.7 * 0.7 + 0.3 * 0.3;
  CHECK(enumerate_success(c, m) == doctest::Approx(exact).epsilon(1e-12));
  CHECK(analytic_success_probability(c, m) == doctest::Approx(0.49).epsilon(1e-12));

  const McEstimate est = monte_carlo_success_probability(c, m, 100000, Rng(17));
  CHECK(std::abs(est.s - exact) < 5 * est.stderr_ + 1e-12);
  CHECK(std::abs(est.s - exact) < 0.01);
}

TEST_CASE("monte carlo matches the exhaustive oracle with readout") {
  // A true mirror: the doubled CNOT cancels and layer 3 inverts layer 0,
  // so the ideal outcome is definitely 00.
  const DeviceGraph dev = grid_device(1, 2);
  Circuit c;
  c.n_device = 2;
  c.active = {0, 1};
  c.layers.push_back({Gate::xp(), Gate::zrot(kPi / 2)});
  c.layers.push_back({Gate::cnot_control(1), Gate::cnot_target(0)});
  c.layers.push_back({Gate::cnot_control(1), Gate::cnot_target(0)});
  c.layers.push_back({Gate::xm(), Gate::zrot(-kPi / 2)});

  ErrorModel m;
  m.rates.one_qubit[{static_cast<int>(GateClass::Xp), 0}] = PauliTriple{0.1, 0.05, 0.0};
  m.rates.one_qubit[{static_cast<int>(GateClass::Xm), 0}] = PauliTriple{0.0, 0.2, 0.0};
  m.rates.one_qubit[{static_cast<int>(GateClass::ZRot), 1}] = PauliTriple{0.0, 0.1, 0.1};
  m.rates.cnot[{0, 1, 0}] = PauliTriple{0.15, 0.0, 0.0};
  m.rates.cnot[{0, 1, 1}] = PauliTriple{0.0, 0.0, 0.25};
  m.rates.readout = {0.02, 0.08};

  const double exact = enumerate_success(c, m);
  const McEstimate est = monte_carlo_success_probability(c, m, 200000, Rng(23));
  CHECK(std::abs(est.s - exact) < 5 * est.stderr_ + 1e-12);
  CHECK(std::abs(est.s - exact) < 0.01);
}

TEST_CASE("monte carlo tracks the analytic product on mirror circuits") {
  const DeviceGraph dev = t5_device();
  Rng model_rng(31);
  const ErrorModel m = sample_biased_lps(dev, model_rng);
  for (uint64_t seed = 0; seed < 12; ++seed) {
    const int depth = 4 << (seed % 3);  // 4, 8, 16
    const Circuit c = mirror(dev, {0, 1, 2, 3}, depth, 100 + seed);
    const double s = analytic_success_probability(c, m);
    const McEstimate est = monte_carlo_success_probability(c, m, 20000, Rng(seed));
    CHECK(std::abs(est.s - s) < 5 * est.stderr_ + 0.005);
  }
}

TEST_CASE("monte carlo is deterministic and jobs-invariant") {
  const DeviceGraph dev = t5_device();
  Rng model_rng(37);
  const ErrorModel m = sample_biased_lps(dev, model_rng);
  const Circuit c = mirror(dev, {0, 1, 2}, 8, 5);
  const McEstimate a = monte_carlo_success_probability(c, m, 5000, Rng(7), 1);
  const McEstimate b = monte_carlo_success_probability(c, m, 5000, Rng(7), 1);
  const McEstimate d = monte_carlo_success_probability(c, m, 5000, Rng(7), 4);
  CHECK(a.s == b.s);
  CHECK(a.s == d.s);
  const McEstimate e = monte_carlo_success_probability(c, m, 5000, Rng(8), 1);
  CHECK(a.s != e.s);  // different base stream
}

TEST_CASE("backend kind mismatches throw") {
  const DeviceGraph dev = t5_device();
  Rng rng(41);
  const ErrorModel stochastic = sample_biased_lps(dev, rng);
  const ErrorModel coherent = sample_coherent_model(dev, rng);
  const Circuit c = mirror(dev, {0, 1}, 4, 9);
  CHECK_THROWS_AS(analytic_success_probability(c, coherent), ModelKindMismatch);
  CHECK_THROWS_AS(monte_carlo_success_probability(c, coherent, 100, Rng(1)), ModelKindMismatch);
  CHECK_THROWS_AS(statevector_success_probability(c, stochastic), ModelKindMismatch);
  CHECK_THROWS_AS(monte_carlo_success_probability(c, stochastic, 0, Rng(1)), ConfigError);
}

TEST_CASE("statevector backend reproduces simple coherent cases") {
  const DeviceGraph dev = grid_device(1, 2);
  Circuit c;
  c.n_device = 2;
  c.active = {0};
  c.layers.push_back({Gate::xp()});
  c.layers.push_back({Gate::xm()});

  ErrorModel m;
  m.kind = ErrorModelKind::CoherentLocal;
  const double infidelity = 0.05;
  m.coherent.angle = 2 * std::asin(std::sqrt(infidelity));

  // An X over-rotation commutes with both gates: the success probability is
  // exactly 1 - sin^2(angle) for the two accumulated half-errors... the two
  // X rotations compose to angle * 2 about X on |0>.
  m.coherent.one_qubit_axis[{1, 0}] = 1;  // Xp -> X axis
  m.coherent.one_qubit_axis[{2, 0}] = 1;  // Xm -> X axis
  const double s = statevector_success_probability(c, m);
  CHECK(s == doctest::Approx(std::pow(std::cos(m.coherent.angle), 2)).epsilon(1e-9));

  // Z errors after Xp / before the inverse do not commute through; the
  // mirror no longer returns exactly to |0>.
  ErrorModel mz = m;
  mz.coherent.one_qubit_axis[{1, 0}] = 3;
  mz.coherent.one_qubit_axis[{2, 0}] = 3;
  const double sz = statevector_success_probability(c, mz);
  CHECK(sz < 1.0);
  CHECK(sz >= 0.0);

  // Zero-angle errors leave the ideal outcome certain.
  ErrorModel ideal = m;
  ideal.coherent.angle = 0.0;
  CHECK(statevector_success_probability(c, ideal) == doctest::Approx(1.0));
}

TEST_CASE("statevector backend enforces the width cap") {
  const DeviceGraph dev = grid_device(4, 4);
  Rng rng(43);
  const ErrorModel m = sample_coherent_model(dev, rng);
  SamplerConfig cfg;
  Rng srng(3);
  cfg.qubits = sample_connected_subset(dev, 13, srng);
  cfg.depth = 2;
  Rng crng(5);
  const Circuit c = sample_randomized_mirror_circuit(dev, cfg, crng);
  CHECK_THROWS_AS(statevector_success_probability(c, m), ConfigError);
}

TEST_CASE("shot noise quantizes and is unbiased") {
  Rng rng(47);
  CHECK(add_shot_noise(0.37, 0, rng) == 0.37);
  double sum = 0.0;
  const int reps = 4000;
  for (int i = 0; i < reps; ++i) {
    const double v = add_shot_noise(0.37, 100, rng);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    const double scaled = v * 100.0;
    CHECK(std::abs(scaled - std::round(scaled)) < 1e-9);
    sum += v;
  }
  CHECK(sum / reps == doctest::Approx(0.37).epsilon(0.02));
  CHECK_THROWS_AS(add_shot_noise(1.5, 100, rng), DataError);
  CHECK_THROWS_AS(add_shot_noise(0.5, -1, rng), ConfigError);
}

TEST_CASE("split counts use largest remainders") {
  const SplitFractions f;
  CHECK(split_counts(10, f) == std::vector<size_t>{7, 2, 1});
  CHECK(split_counts(2400, f) == std::vector<size_t>{1680, 480, 240});
  CHECK(split_counts(7, f) == std::vector<size_t>{5, 1, 1});
  CHECK(split_counts(0, f) == std::vector<size_t>{0, 0, 0});
  for (size_t n : {1u, 3u, 11u, 97u, 1001u}) {
    const auto counts = split_counts(n, f);
    CHECK(counts[0] + counts[1] + counts[2] == n);
  }
  SplitFractions half{0.5, 0.25, 0.25};
  CHECK(split_counts(8, half) == std::vector<size_t>{4, 2, 2});
}

TEST_CASE("build_dataset labels and splits") {
  const DeviceGraph dev = t5_device();
  Rng model_rng(53);
  const ErrorModel m = sample_biased_lps(dev, model_rng);
  std::vector<Circuit> circuits;
  std::vector<std::string> kinds;
  for (uint64_t i = 0; i < 30; ++i) {
    circuits.push_back(mirror(dev, {0, 1, 2}, 4 + 4 * (i % 3), 200 + i));
    kinds.push_back(i % 5 == 0 ? "pmc" : "rmc");
  }
  const CapabilityDataset ds =
      build_dataset(dev, circuits, kinds, m, 0, SplitFractions{}, Rng(61));

  REQUIRE(ds.records.size() == 30);
  CHECK(ds.d_max == 16);  // deepest emitted mirror: 12 sampled + 4 central
  std::set<std::string> ids;
  std::map<std::string, int> split_sizes;
  for (size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    ids.insert(r.id);
    split_sizes[r.split] += 1;
    CHECK(r.kind == kinds[i]);
    CHECK(r.circuit == circuits[i]);
    CHECK(r.s >= 0.0);
    CHECK(r.s <= 1.0);
    CHECK(r.s_hat == r.s);  // infinite shots
    CHECK(r.n_shots == 0);
    CHECK(r.s == doctest::Approx(analytic_success_probability(r.circuit, m)).epsilon(1e-12));
  }
  CHECK(ids.size() == 30);
  CHECK(split_sizes["train"] == 21);
  CHECK(split_sizes["validate"] == 6);
  CHECK(split_sizes["test"] == 3);
  CHECK(ds.split_indices("train").size() == 21);
  CHECK(ds.split_indices("validate").size() == 6);
  CHECK(ds.split_indices("test").size() == 3);

  // Shot noise changes labels but not the underlying s.
  const CapabilityDataset noisy =
      build_dataset(dev, circuits, kinds, m, 100, SplitFractions{}, Rng(61));
  bool any_diff = false;
  for (size_t i = 0; i < noisy.records.size(); ++i) {
    CHECK(noisy.records[i].s == ds.records[i].s);
    CHECK(noisy.records[i].n_shots == 100);
    if (noisy.records[i].s_hat != noisy.records[i].s) any_diff = true;
  }
  CHECK(any_diff);

  // Same seed, same assignment; different seed shuffles splits.
  const CapabilityDataset again =
      build_dataset(dev, circuits, kinds, m, 0, SplitFractions{}, Rng(61));
  bool same = true, other_same = true;
  const CapabilityDataset other =
      build_dataset(dev, circuits, kinds, m, 0, SplitFractions{}, Rng(62));
  for (size_t i = 0; i < 30; ++i) {
    same = same && again.records[i].split == ds.records[i].split;
    other_same = other_same && other.records[i].split == ds.records[i].split;
  }
  CHECK(same);
  CHECK_FALSE(other_same);
}

TEST_CASE("coherent datasets use the statevector backend") {
  const DeviceGraph dev = t5_device();
  Rng model_rng(67);
  const ErrorModel m = sample_coherent_model(dev, model_rng);
  std::vector<Circuit> circuits;
  std::vector<std::string> kinds;
  for (uint64_t i = 0; i < 6; ++i) {
    circuits.push_back(mirror(dev, {0, 1, 2}, 4, 300 + i));
    kinds.push_back("rmc");
  }
  const CapabilityDataset ds =
      build_dataset(dev, circuits, kinds, m, 0, SplitFractions{}, Rng(71));
  for (size_t i = 0; i < ds.records.size(); ++i)
    CHECK(ds.records[i].s ==
          doctest::Approx(statevector_success_probability(circuits[i], m)).epsilon(1e-12));
}

TEST_CASE("nested subsampling preserves splits and prefixes") {
  const DeviceGraph dev = t5_device();
  Rng model_rng(73);
  const ErrorModel m = sample_biased_lps(dev, model_rng);
  std::vector<Circuit> circuits;
  std::vector<std::string> kinds;
  for (uint64_t i = 0; i < 60; ++i) {
    circuits.push_back(mirror(dev, {0, 1, 2}, 4, 400 + i));
    kinds.push_back("rmc");
  }
  const CapabilityDataset ds =
      build_dataset(dev, circuits, kinds, m, 0, SplitFractions{}, Rng(79));
  // 60 -> 42 / 12 / 6.
  const CapabilityDataset small = subsample_nested(ds, 10, 4, 6, Rng(83));
  const CapabilityDataset large = subsample_nested(ds, 30, 9, 6, Rng(83));
  CHECK(small.records.size() == 20);
  CHECK(large.records.size() == 45);

  auto ids_of = [](const CapabilityDataset& d, const std::string& split) {
    std::set<std::string> out;
    for (const auto& r : d.records)
      if (r.split == split) out.insert(r.id);
    return out;
  };
  for (const std::string split : {"train", "validate", "test"}) {
    const auto small_ids = ids_of(small, split);
    const auto large_ids = ids_of(large, split);
    const auto full_ids = ids_of(ds, split);
    for (const auto& id : small_ids) CHECK(large_ids.count(id) == 1);
    for (const auto& id : large_ids) CHECK(full_ids.count(id) == 1);
  }
  CHECK(ids_of(small, "train").size() == 10);
  CHECK(ids_of(small, "validate").size() == 4);
  CHECK(ids_of(small, "test").size() == 6);

  CHECK_THROWS_AS(subsample_nested(ds, 100, 4, 6, Rng(83)), DataError);
}

TEST_CASE("dataset jsonl round trip") {
  const DeviceGraph dev = t5_device();
  Rng model_rng(89);
  const ErrorModel m = sample_biased_lps(dev, model_rng);
  std::vector<Circuit> circuits;
  std::vector<std::string> kinds;
  for (uint64_t i = 0; i < 8; ++i) {
    circuits.push_back(mirror(dev, {0, 1, 2, 3}, 4, 500 + i));
    kinds.push_back(i % 2 ? "rmc" : "pmc");
  }
  CapabilityDataset ds = build_dataset(dev, circuits, kinds, m, 50, SplitFractions{}, Rng(97));
  ds.d_max = 8;
  ds.model_hash = "abc123";
  ds.master_seed = 424242;

  const std::string text = dataset_to_jsonl(ds);
  const CapabilityDataset back = dataset_from_jsonl(text);
  CHECK(back.device.n == ds.device.n);
  CHECK(back.device.edges == ds.device.edges);
  CHECK(back.d_max == 8);
  CHECK(back.model_hash == "abc123");
  CHECK(back.master_seed == 424242);
  REQUIRE(back.records.size() == ds.records.size());
  for (size_t i = 0; i < ds.records.size(); ++i) {
    CHECK(back.records[i].id == ds.records[i].id);
    CHECK(back.records[i].kind == ds.records[i].kind);
    CHECK(back.records[i].split == ds.records[i].split);
    CHECK(back.records[i].circuit == ds.records[i].circuit);
    CHECK(back.records[i].s == ds.records[i].s);
    CHECK(back.records[i].s_hat == ds.records[i].s_hat);
    CHECK(back.records[i].n_shots == ds.records[i].n_shots);
  }

  const fs::path path = fs::temp_directory_path() / "qcap_dataset_test.jsonl";
  save_dataset(ds, path.string());
  const CapabilityDataset from_file = load_dataset(path.string());
  fs::remove(path);
  CHECK(from_file.records.size() == ds.records.size());

  CHECK_THROWS_AS(dataset_from_jsonl("not a dataset"), DataError);
  CHECK_THROWS_AS(dataset_from_jsonl(""), DataError);
  std::string corrupted = text;
  corrupted += "{\"type\":\"nonsense\"}\n";
  CHECK_THROWS_AS(dataset_from_jsonl(corrupted), DataError);
}
