#pragma once

#include <utility>
#include <vector>

#include "qcap/circuit.hpp"
#include "qcap/device.hpp"
#include "qcap/rng.hpp"

namespace qcap {

enum class MirrorKind { Randomized, Periodic };

// depth is the mirror depth d: even, >= 2, counting the two sampled halves.
// The emitted circuit has d + 4 layers: d/2 sampled, a 4-layer central Pauli
// block, then the exact layer-by-layer inverse of the first half. The central
// Pauli (uniform I/X/Y/Z per qubit) is compiled as [Xp|Idle], [Xp|Idle],
// [Z(pi/2)|Z(0)], [Z(pi/2)|Z(0)], the only way to realize all four Paulis
// from this gate set with an even number of layers.
struct SamplerConfig {
  std::vector<int> qubits;
  int depth = 2;
  double xi = 0.125;
  MirrorKind kind = MirrorKind::Randomized;
  int germ_length = 1;  // Periodic only; must divide depth/2
};

// (one-qubit layer, two-qubit layer) over the given active subset. The
// one-qubit layer draws each gate uniformly from the six-element set
// {Z(-pi/2), Z(0), Z(pi/2), Z(pi), Xp, Xm}. The two-qubit layer thins a
// random-greedy maximal matching of the induced subgraph with a per-subset
// calibrated keep probability, so that the expected fraction of active
// qubits occupied by CNOTs equals xi (clamped to the subset's achievable
// maximum); unmatched qubits are Idle.
std::pair<Layer, Layer> sample_layer_pair(const DeviceGraph& dev, const std::vector<int>& qubits,
                                          double xi, Rng& rng);

struct MirrorParts {
  Circuit circuit;
  std::vector<int> central_pauli;  // axis per slot: 0=I 1=X 2=Y 3=Z
  int half_layers = 0;             // depth/2
  int core_layers = 4;
};

MirrorParts sample_randomized_mirror_parts(const DeviceGraph& dev, const SamplerConfig& cfg,
                                           Rng& rng);
MirrorParts sample_periodic_mirror_parts(const DeviceGraph& dev, const SamplerConfig& cfg,
                                         Rng& rng);

Circuit sample_randomized_mirror_circuit(const DeviceGraph& dev, const SamplerConfig& cfg,
                                         Rng& rng);
Circuit sample_periodic_mirror_circuit(const DeviceGraph& dev, const SamplerConfig& cfg, Rng& rng);

// Uniform-ish random connected induced subset of w qubits (random frontier
// growth from a random seed vertex).
std::vector<int> sample_connected_subset(const DeviceGraph& dev, int w, Rng& rng);

// Expected CNOT-occupied fraction achievable at keep probability 1 for this
// subset (diagnostic; xi above this is clamped).
double max_achievable_cnot_density(const DeviceGraph& dev, const std::vector<int>& qubits);

}  // namespace qcap
