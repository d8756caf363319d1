#include "qcap/mirror.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <sstream>

#include "qcap/errors.hpp"
#include "qcap/hashing.hpp"

namespace qcap {
namespace {

// Edges of the induced subgraph, as slot pairs (positions in `qubits`).
std::vector<std::pair<int, int>> induced_slot_edges(const DeviceGraph& dev,
                                                    const std::vector<int>& qubits) {
  std::vector<std::pair<int, int>> out;
  for (const auto& [a, b] : dev.undirected_edges()) {
    int sa = -1, sb = -1;
    for (size_t s = 0; s < qubits.size(); ++s) {
      if (qubits[s] == a) sa = static_cast<int>(s);
      if (qubits[s] == b) sb = static_cast<int>(s);
    }
    if (sa >= 0 && sb >= 0) out.emplace_back(sa, sb);
  }
  return out;
}

// Random-greedy maximal matching: shuffle the edge list, add disjoint edges.
std::vector<std::pair<int, int>> greedy_maximal_matching(
    const std::vector<std::pair<int, int>>& edges, int w, Rng& rng) {
  std::vector<std::pair<int, int>> shuffled = edges;
  rng.shuffle(shuffled);
  std::vector<char> used(static_cast<size_t>(w), 0);
  std::vector<std::pair<int, int>> matching;
  for (const auto& [a, b] : shuffled) {
    if (used[static_cast<size_t>(a)] || used[static_cast<size_t>(b)]) continue;
    used[static_cast<size_t>(a)] = used[static_cast<size_t>(b)] = 1;
    matching.emplace_back(a, b);
  }
  return matching;
}

// E[|M|] for the greedy matching distribution, estimated once per induced
// subgraph with a fixed internal seed so calibration never consumes caller
// randomness and is identical across runs.
double expected_matching_size(const std::vector<std::pair<int, int>>& edges, int w) {
  if (edges.empty()) return 0.0;
  static std::mutex mu;
  static std::map<std::string, double> cache;
  std::ostringstream key;
  key << w << ":";
  for (const auto& [a, b] : edges) key << a << "," << b << ";";
  {
    std::lock_guard<std::mutex> lock(mu);
    const auto it = cache.find(key.str());
    if (it != cache.end()) return it->second;
  }
  Rng rng(fnv1a(key.str()));
  constexpr int kSamples = 20000;
  long total = 0;
  for (int s = 0; s < kSamples; ++s) total += static_cast<long>(greedy_maximal_matching(edges, w, rng).size());
  const double mean = static_cast<double>(total) / kSamples;
  std::lock_guard<std::mutex> lock(mu);
  cache[key.str()] = mean;
  return mean;
}

void check_subset(const DeviceGraph& dev, const std::vector<int>& qubits) {
  if (qubits.empty()) throw ConfigError("sampler needs a nonempty qubit subset");
  std::vector<int> sorted = qubits;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ConfigError("sampler qubit subset has duplicates");
  for (const int q : qubits)
    if (q < 0 || q >= dev.n) throw ConfigError("sampler qubit not on device");
}

Gate uniform_1q_gate(Rng& rng) {
  const uint64_t k = rng.below(6);
  if (k < 4) return Gate::zrot(zrot_angles()[k]);
  return k == 4 ? Gate::xp() : Gate::xm();
}

Layer merged_layer(const DeviceGraph& dev, const std::vector<int>& qubits, double xi, Rng& rng) {
  auto [ones, twos] = sample_layer_pair(dev, qubits, xi, rng);
  Layer out = std::move(twos);
  for (size_t s = 0; s < out.size(); ++s)
    if (out[s].kind == GateKind::Idle) out[s] = ones[s];
  return out;
}

void check_config(const DeviceGraph& dev, const SamplerConfig& cfg) {
  check_subset(dev, cfg.qubits);
  if (cfg.depth < 2 || cfg.depth % 2 != 0) throw ConfigError("mirror depth must be even and >= 2");
  if (cfg.xi < 0.0 || cfg.xi > 1.0) throw ConfigError("xi must be in [0, 1]");
  if (cfg.kind == MirrorKind::Periodic) {
    if (cfg.germ_length < 1 || (cfg.depth / 2) % cfg.germ_length != 0)
      throw ConfigError("germ_length must divide depth/2");
  }
}

MirrorParts assemble_mirror(const DeviceGraph& dev, const SamplerConfig& cfg,
                            std::vector<Layer> half, Rng& rng) {
  const int w = static_cast<int>(cfg.qubits.size());
  MirrorParts parts;
  parts.half_layers = cfg.depth / 2;
  parts.central_pauli.resize(static_cast<size_t>(w));
  for (int s = 0; s < w; ++s) parts.central_pauli[static_cast<size_t>(s)] = static_cast<int>(rng.below(4));

  Circuit& c = parts.circuit;
  c.n_device = dev.n;
  c.active = cfg.qubits;
  c.layers = std::move(half);

  Layer xpart(static_cast<size_t>(w)), zpart(static_cast<size_t>(w));
  for (int s = 0; s < w; ++s) {
    const int p = parts.central_pauli[static_cast<size_t>(s)];
    xpart[static_cast<size_t>(s)] = (p == 1 || p == 2) ? Gate::xp() : Gate::idle();
    zpart[static_cast<size_t>(s)] = (p == 3 || p == 2) ? Gate::zrot(kPi / 2) : Gate::zrot(0.0);
  }
  c.layers.push_back(xpart);
  c.layers.push_back(xpart);
  c.layers.push_back(zpart);
  c.layers.push_back(zpart);

  for (int l = parts.half_layers - 1; l >= 0; --l) {
    Layer inv;
    inv.reserve(static_cast<size_t>(w));
    for (const Gate& g : c.layers[static_cast<size_t>(l)]) inv.push_back(inverse_gate(g));
    c.layers.push_back(std::move(inv));
  }
  return parts;
}

}  // namespace

std::pair<Layer, Layer> sample_layer_pair(const DeviceGraph& dev, const std::vector<int>& qubits,
                                          double xi, Rng& rng) {
  check_subset(dev, qubits);
  if (xi < 0.0 || xi > 1.0) throw ConfigError("xi must be in [0, 1]");
  const int w = static_cast<int>(qubits.size());

  Layer ones;
  ones.reserve(static_cast<size_t>(w));
  for (int s = 0; s < w; ++s) ones.push_back(uniform_1q_gate(rng));

  Layer twos(static_cast<size_t>(w), Gate::idle());
  const auto edges = induced_slot_edges(dev, qubits);
  if (!edges.empty() && xi > 0.0) {
    const double expect = expected_matching_size(edges, w);
    const double keep = expect > 0.0 ? std::min(1.0, xi * w / (2.0 * expect)) : 0.0;
    for (const auto& [sa, sb] : greedy_maximal_matching(edges, w, rng)) {
      if (!rng.bernoulli(keep)) continue;
      const int qa = qubits[static_cast<size_t>(sa)];
      const int qb = qubits[static_cast<size_t>(sb)];
      const bool ab = dev.has_edge(qa, qb);
      const bool ba = dev.has_edge(qb, qa);
      bool a_controls = ab;
      if (ab && ba) a_controls = rng.bernoulli(0.5);
      const int cs = a_controls ? sa : sb;
      const int ts = a_controls ? sb : sa;
      twos[static_cast<size_t>(cs)] = Gate::cnot_control(qubits[static_cast<size_t>(ts)]);
      twos[static_cast<size_t>(ts)] = Gate::cnot_target(qubits[static_cast<size_t>(cs)]);
    }
  }
  return {std::move(ones), std::move(twos)};
}

MirrorParts sample_randomized_mirror_parts(const DeviceGraph& dev, const SamplerConfig& cfg,
                                           Rng& rng) {
  check_config(dev, cfg);
  std::vector<Layer> half;
  half.reserve(static_cast<size_t>(cfg.depth / 2));
  for (int l = 0; l < cfg.depth / 2; ++l) half.push_back(merged_layer(dev, cfg.qubits, cfg.xi, rng));
  return assemble_mirror(dev, cfg, std::move(half), rng);
}

MirrorParts sample_periodic_mirror_parts(const DeviceGraph& dev, const SamplerConfig& cfg,
                                         Rng& rng) {
  check_config(dev, cfg);
  if (cfg.kind != MirrorKind::Periodic) {
    SamplerConfig fixed = cfg;
    fixed.kind = MirrorKind::Periodic;
    check_config(dev, fixed);
  }
  std::vector<Layer> germ;
  germ.reserve(static_cast<size_t>(cfg.germ_length));
  for (int l = 0; l < cfg.germ_length; ++l) germ.push_back(merged_layer(dev, cfg.qubits, cfg.xi, rng));
  std::vector<Layer> half;
  half.reserve(static_cast<size_t>(cfg.depth / 2));
  const int reps = (cfg.depth / 2) / cfg.germ_length;
  for (int r = 0; r < reps; ++r)
    for (const Layer& lay : germ) half.push_back(lay);
  return assemble_mirror(dev, cfg, std::move(half), rng);
}

Circuit sample_randomized_mirror_circuit(const DeviceGraph& dev, const SamplerConfig& cfg,
                                         Rng& rng) {
  return sample_randomized_mirror_parts(dev, cfg, rng).circuit;
}

Circuit sample_periodic_mirror_circuit(const DeviceGraph& dev, const SamplerConfig& cfg, Rng& rng) {
  return sample_periodic_mirror_parts(dev, cfg, rng).circuit;
}

std::vector<int> sample_connected_subset(const DeviceGraph& dev, int w, Rng& rng) {
  if (w < 1 || w > dev.n) throw ConfigError("subset width out of range");
  std::vector<int> subset{static_cast<int>(rng.below(static_cast<uint64_t>(dev.n)))};
  std::vector<char> in(static_cast<size_t>(dev.n), 0);
  in[static_cast<size_t>(subset[0])] = 1;
  while (static_cast<int>(subset.size()) < w) {
    std::vector<int> frontier;
    for (const int q : subset)
      for (const int nb : dev.neighbors(q))
        if (!in[static_cast<size_t>(nb)] &&
            std::find(frontier.begin(), frontier.end(), nb) == frontier.end())
          frontier.push_back(nb);
    if (frontier.empty()) throw ConfigError("device has no connected subset of the requested width");
    std::sort(frontier.begin(), frontier.end());
    const int pick = frontier[static_cast<size_t>(rng.below(frontier.size()))];
    subset.push_back(pick);
    in[static_cast<size_t>(pick)] = 1;
  }
  std::sort(subset.begin(), subset.end());
  return subset;
}

double max_achievable_cnot_density(const DeviceGraph& dev, const std::vector<int>& qubits) {
  check_subset(dev, qubits);
  const auto edges = induced_slot_edges(dev, qubits);
  if (edges.empty()) return 0.0;
  return 2.0 * expected_matching_size(edges, static_cast<int>(qubits.size())) /
         static_cast<double>(qubits.size());
}

}  // namespace qcap
