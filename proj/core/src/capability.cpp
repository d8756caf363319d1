#include "qcap/capability.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "qcap/errors.hpp"
#include "qcap/hashing.hpp"
#include "qcap/statevector.hpp"
#include "qcap/tableau.hpp"
#include "qcap/thread_pool.hpp"

namespace qcap {

double analytic_success_probability(const Circuit& c, const ErrorModel& m) {
  if (!m.is_stochastic())
    throw ModelKindMismatch("analytic backend requires a stochastic model");
  const auto sens = sensitivity_channels(c);
  const int w = c.width();
  const int d = c.depth();
  double log_s = 0.0;
  for (int l = 0; l < d; ++l) {
    for (int s = 0; s < w; ++s) {
      const PauliTriple t = effective_triple(m, c, l, s);
      if (t.total() == 0.0) continue;
      for (int a = 0; a < 3; ++a) {
        if (!sens[(static_cast<size_t>(s) * static_cast<size_t>(d) + static_cast<size_t>(l)) * 3 +
                  static_cast<size_t>(a)])
          continue;
        const double rate = t.component(a + 1);
        if (rate > 0.0) log_s += std::log1p(-rate);
      }
    }
  }
  for (const int q : c.active) {
    if (q < static_cast<int>(m.rates.readout.size())) {
      const double r = m.rates.readout[static_cast<size_t>(q)];
      if (r > 0.0) log_s += std::log1p(-r);
    }
  }
  return std::exp(log_s);
}

namespace {

struct CompiledLocation {
  int slot;
  double cx, cxy, cxyz;  // cumulative probabilities
};

struct CompiledLayer {
  std::vector<CompiledLocation> locations;
};

std::vector<CompiledLayer> compile_error_locations(const Circuit& c, const ErrorModel& m) {
  std::vector<CompiledLayer> out(static_cast<size_t>(c.depth()));
  for (int l = 0; l < c.depth(); ++l) {
    for (int s = 0; s < c.width(); ++s) {
      const PauliTriple t = effective_triple(m, c, l, s);
      if (t.total() == 0.0) continue;
      out[static_cast<size_t>(l)].locations.push_back(
          {s, t.x, t.x + t.y, t.x + t.y + t.z});
    }
  }
  return out;
}

}  // namespace

McEstimate monte_carlo_success_probability(const Circuit& c, const ErrorModel& m, long trials,
                                           const Rng& base, int jobs) {
  if (!m.is_stochastic())
    throw ModelKindMismatch("monte carlo backend requires a stochastic model");
  if (trials < 1) throw ConfigError("monte carlo needs at least one trial");
  success_bitstring(c);  // rejects circuits without a definite outcome
  const auto layers = compile_error_locations(c, m);
  const int w = c.width();
  std::vector<double> readout;
  readout.reserve(static_cast<size_t>(w));
  for (const int q : c.active)
    readout.push_back(q < static_cast<int>(m.rates.readout.size())
                          ? m.rates.readout[static_cast<size_t>(q)]
                          : 0.0);
  const bool any_readout =
      std::any_of(readout.begin(), readout.end(), [](double r) { return r > 0.0; });

  std::vector<uint8_t> success(static_cast<size_t>(trials), 0);
  parallel_for(static_cast<size_t>(trials), jobs, [&](size_t t) {
    Rng rng = base.split("trial", static_cast<uint64_t>(t));
    PauliString frame = PauliString::identity(w);
    for (int l = 0; l < c.depth(); ++l) {
      if (!frame.is_identity()) conjugate_through_layer(frame, c, l);
      for (const auto& loc : layers[static_cast<size_t>(l)].locations) {
        const double u = rng.uniform();
        if (u >= loc.cxyz) continue;
        const uint64_t bit = uint64_t{1} << loc.slot;
        if (u < loc.cx) {
          frame.x ^= bit;  // X
        } else if (u < loc.cxy) {
          frame.x ^= bit;  // Y
          frame.z ^= bit;
        } else {
          frame.z ^= bit;  // Z
        }
      }
    }
    uint64_t flips = frame.x;
    if (any_readout) {
      for (int s = 0; s < w; ++s)
        if (readout[static_cast<size_t>(s)] > 0.0 && rng.bernoulli(readout[static_cast<size_t>(s)]))
          flips ^= uint64_t{1} << s;
    }
    success[t] = flips == 0 ? 1 : 0;
  });

  const long hits = std::accumulate(success.begin(), success.end(), 0L);
  McEstimate est;
  est.trials = trials;
  est.s = static_cast<double>(hits) / static_cast<double>(trials);
  est.stderr_ = std::sqrt(est.s * (1.0 - est.s) / static_cast<double>(trials));
  return est;
}

double statevector_success_probability(const Circuit& c, const ErrorModel& m) {
  if (m.is_stochastic())
    throw ModelKindMismatch("statevector backend requires a coherent model");
  if (c.width() > 12) throw ConfigError("statevector backend capped at width 12");
  const auto target_bits = success_bitstring(c);

  Statevector psi(c.width());
  std::vector<int> axes(static_cast<size_t>(c.width()), 0);
  for (int l = 0; l < c.depth(); ++l) {
    psi.apply_layer(c, l);
    for (int s = 0; s < c.width(); ++s) {
      const Gate& g = c.layers[static_cast<size_t>(l)][static_cast<size_t>(s)];
      const int q = c.active[static_cast<size_t>(s)];
      switch (g.kind) {
        case GateKind::Idle: break;
        case GateKind::ZRot: {
          if (std::abs(g.theta) < 1e-9) break;
          const auto it = m.coherent.one_qubit_axis.find({0, q});
          if (it == m.coherent.one_qubit_axis.end())
            throw MissingRate("no coherent axis for ZRot on q" + std::to_string(q));
          std::fill(axes.begin(), axes.end(), 0);
          axes[static_cast<size_t>(s)] = it->second;
          psi.apply_pauli_rotation(axes, m.coherent.angle);
          break;
        }
        case GateKind::Xp:
        case GateKind::Xm: {
          const int cls = g.kind == GateKind::Xp ? 1 : 2;
          const auto it = m.coherent.one_qubit_axis.find({cls, q});
          if (it == m.coherent.one_qubit_axis.end())
            throw MissingRate("no coherent axis for 1q gate on q" + std::to_string(q));
          std::fill(axes.begin(), axes.end(), 0);
          axes[static_cast<size_t>(s)] = it->second;
          psi.apply_pauli_rotation(axes, m.coherent.angle);
          break;
        }
        case GateKind::CnotControl: {
          const auto it = m.coherent.cnot_axes.find({q, g.partner});
          if (it == m.coherent.cnot_axes.end())
            throw MissingRate("no coherent axes for CNOT q" + std::to_string(q) + "->q" +
                              std::to_string(g.partner));
          std::fill(axes.begin(), axes.end(), 0);
          axes[static_cast<size_t>(s)] = it->second.first;
          axes[static_cast<size_t>(c.slot_of(g.partner))] = it->second.second;
          psi.apply_pauli_rotation(axes, m.coherent.angle);
          break;
        }
        case GateKind::CnotTarget: break;
      }
    }
  }
  return psi.basis_probability(target_bits);
}

double add_shot_noise(double s, long n_shots, Rng& rng) {
  if (s < 0.0 || s > 1.0) throw DataError("success probability outside [0, 1]");
  if (n_shots < 0) throw ConfigError("shot count must be >= 0");
  if (n_shots == 0) return s;
  return static_cast<double>(rng.binomial(static_cast<uint64_t>(n_shots), s)) /
         static_cast<double>(n_shots);
}

std::vector<size_t> split_counts(size_t n, const SplitFractions& f) {
  const double fr[3] = {f.train, f.validate, f.test};
  double sum = 0.0;
  for (const double x : fr) {
    if (x < 0.0) throw ConfigError("split fractions must be nonnegative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  std::vector<size_t> counts(3);
  std::vector<std::pair<double, size_t>> remainders;
  size_t assigned = 0;
  for (size_t i = 0; i < 3; ++i) {
    const double exact = fr[i] * static_cast<double>(n);
    counts[i] = static_cast<size_t>(std::floor(exact + 1e-9));
    assigned += counts[i];
    remainders.push_back({exact - std::floor(exact + 1e-9), i});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t k = 0; assigned < n; ++k, ++assigned) counts[remainders[k % 3].second] += 1;
  return counts;
}

namespace {
constexpr const char* kSplitNames[3] = {"train", "validate", "test"};
}

CapabilityDataset build_dataset(const DeviceGraph& dev, const std::vector<Circuit>& circuits,
                                const std::vector<std::string>& kinds, const ErrorModel& m,
                                long n_shots, const SplitFractions& fractions, const Rng& rng,
                                int jobs) {
  if (circuits.size() != kinds.size())
    throw ConfigError("circuits and kinds must have equal length");
  CapabilityDataset ds;
  ds.device = dev;
  ds.model_hash = content_hash(model_to_json(m));
  ds.records.resize(circuits.size());

  int d_max = 0;
  for (const auto& c : circuits) d_max = std::max(d_max, c.depth());
  ds.d_max = d_max;

  parallel_for(circuits.size(), jobs, [&](size_t i) {
    CapabilityRecord& r = ds.records[i];
    r.circuit = circuits[i];
    r.kind = kinds[i];
    r.n_shots = n_shots;
    std::ostringstream id;
    id << "c" << std::setw(6) << std::setfill('0') << i;
    r.id = id.str();
    r.s = m.is_stochastic() ? analytic_success_probability(r.circuit, m)
                            : statevector_success_probability(r.circuit, m);
    Rng shot_rng = rng.split("shots", static_cast<uint64_t>(i));
    r.s_hat = add_shot_noise(r.s, n_shots, shot_rng);
  });

  const auto counts = split_counts(circuits.size(), fractions);
  std::vector<size_t> order(circuits.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng = rng.split("split");
  split_rng.shuffle(order);
  size_t pos = 0;
  for (size_t part = 0; part < 3; ++part)
    for (size_t k = 0; k < counts[part]; ++k) ds.records[order[pos++]].split = kSplitNames[part];
  return ds;
}

std::vector<size_t> CapabilityDataset::split_indices(const std::string& split) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < records.size(); ++i)
    if (records[i].split == split) out.push_back(i);
  return out;
}

CapabilityDataset subsample_nested(const CapabilityDataset& ds, size_t n_train, size_t n_validate,
                                   size_t n_test, const Rng& rng) {
  const size_t want[3] = {n_train, n_validate, n_test};
  CapabilityDataset out;
  out.device = ds.device;
  out.master_seed = ds.master_seed;
  out.model_hash = ds.model_hash;
  out.d_max = ds.d_max;
  std::vector<size_t> picked;
  for (size_t part = 0; part < 3; ++part) {
    auto idx = ds.split_indices(kSplitNames[part]);
    if (want[part] > idx.size())
      throw DataError(std::string("subsample wants more ") + kSplitNames[part] +
                      " records than the dataset has");
    Rng part_rng = rng.split(std::string("nest-") + kSplitNames[part]);
    part_rng.shuffle(idx);
    picked.insert(picked.end(), idx.begin(), idx.begin() + static_cast<long>(want[part]));
  }
  std::sort(picked.begin(), picked.end());
  for (const size_t i : picked) out.records.push_back(ds.records[i]);
  return out;
}

namespace {

nlohmann::ordered_json record_to_json(const CapabilityRecord& r) {
  nlohmann::ordered_json j;
  j["type"] = "record";
  j["id"] = r.id;
  j["kind"] = r.kind;
  j["split"] = r.split;
  j["width"] = r.circuit.width();
  j["depth"] = r.circuit.depth();
  j["n_shots"] = r.n_shots;
  j["s"] = r.s;
  j["s_hat"] = r.s_hat;
  j["circuit"] = serialize_circuit(r.circuit);
  return j;
}

}  // namespace

std::string dataset_to_jsonl(const CapabilityDataset& ds) {
  std::ostringstream out;
  nlohmann::ordered_json header;
  header["type"] = "header";
  header["format_version"] = 1;
  header["master_seed"] = ds.master_seed;
  header["model_hash"] = ds.model_hash;
  header["d_max"] = ds.d_max;
  header["records"] = ds.records.size();
  header["device"] = nlohmann::ordered_json::parse(device_to_json(ds.device));
  out << header.dump() << "\n";
  for (const auto& r : ds.records) out << record_to_json(r).dump() << "\n";
  return out.str();
}

CapabilityDataset dataset_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  CapabilityDataset ds;
  bool have_header = false;
  size_t declared = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("dataset line is not valid JSON: ") + e.what());
    }
    const std::string type = j.value("type", "");
    if (type == "header") {
      if (have_header) throw SchemaError("dataset has two header lines");
      have_header = true;
      ds.master_seed = j.at("master_seed").get<uint64_t>();
      ds.model_hash = j.at("model_hash").get<std::string>();
      ds.d_max = j.at("d_max").get<int>();
      declared = j.at("records").get<size_t>();
      ds.device = device_from_json(j.at("device").dump());
    } else if (type == "record") {
      if (!have_header) throw SchemaError("dataset record before header");
      CapabilityRecord r;
      r.id = j.at("id").get<std::string>();
      r.kind = j.at("kind").get<std::string>();
      r.split = j.at("split").get<std::string>();
      r.n_shots = j.at("n_shots").get<long>();
      r.s = j.at("s").get<double>();
      r.s_hat = j.at("s_hat").get<double>();
      r.circuit = parse_circuit(j.at("circuit").get<std::string>(), ds.device.n);
      if (r.circuit.width() != j.at("width").get<int>() ||
          r.circuit.depth() != j.at("depth").get<int>())
        throw SchemaError("dataset record shape fields disagree with its circuit");
      ds.records.push_back(std::move(r));
    } else {
      throw SchemaError("dataset line has unknown type: " + type);
    }
  }
  if (!have_header) throw SchemaError("dataset has no header line");
  if (ds.records.size() != declared)
    throw SchemaError("dataset record count disagrees with header");
  return ds;
}

void save_dataset(const CapabilityDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset file: " + path);
  out << dataset_to_jsonl(ds);
}

CapabilityDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return dataset_from_jsonl(ss.str());
}

}  // namespace qcap
