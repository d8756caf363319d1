#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "qcap/circuit.hpp"
#include "qcap/device.hpp"
#include "qcap/rng.hpp"

namespace qcap {

// Rate keys attach to gate classes, not gate instances: all nonzero ZRot
// angles share one class per qubit, and Z(0)/Idle carry no error anywhere
// (the encoding cannot distinguish them, so a generator that penalized them
// would be unlearnable by construction).
enum class GateClass { ZRot = 0, Xp = 1, Xm = 2 };

struct PauliTriple {
  double x = 0.0, y = 0.0, z = 0.0;
  double total() const { return x + y + z; }
  double component(int axis) const;  // axis: 1 = X, 2 = Y, 3 = Z
};

struct LpsRates {
  // (gate class, qubit) -> rates on that qubit
  std::map<std::pair<int, int>, PauliTriple> one_qubit;
  // (control, target, acted qubit) -> rates on the acted qubit
  std::map<std::tuple<int, int, int>, PauliTriple> cnot;
  // classical bit flip per device qubit at measurement
  std::vector<double> readout;

  // number of stored scalar rate parameters
  size_t parameter_count() const;
};

struct CoherentRates {
  double angle = 0.0;
  // (gate class, qubit) -> axis 1..3
  std::map<std::pair<int, int>, int> one_qubit_axis;
  // (control, target) -> (axis on control, axis on target), not both 0
  std::map<std::pair<int, int>, std::pair<int, int>> cnot_axes;
};

enum class ErrorModelKind { LocalPauliStochastic, GrowingPains, DoubleTrouble, CoherentLocal };

struct ErrorModel {
  ErrorModelKind kind = ErrorModelKind::LocalPauliStochastic;
  LpsRates rates;
  // GrowingPains: rates relax from eps toward gp_max_ratio * eps with layer
  // index l as (2 eps + eps_max (e^{l tau} - 1)) / (e^{l tau} + 1).
  double gp_max_ratio = 9.0;
  double gp_tau = 1.0 / 350.0;
  // DoubleTrouble: a CNOT preceded by a CNOT on the same qubit in the
  // previous layer has each rate lifted to 1 - (1 - eps)(1 - dt_add).
  double dt_add = 0.005;
  CoherentRates coherent;

  bool is_stochastic() const { return kind != ErrorModelKind::CoherentLocal; }
};

// Rates each gate class applies to each acted-on qubit: one random Pauli axis
// per (gate, qubit) gets u * max (u uniform in [0,1]), the others stay 0.
// Readout rates are 0.
ErrorModel sample_biased_lps(const DeviceGraph& dev, Rng& rng, double max_1q = 0.0025,
                             double max_2q = 0.01);

// Every (gate, qubit, Pauli) rate independently uniform in [0, hi]; readout
// rates fixed at hi. On a 7x7 grid this stores 1498 parameters.
ErrorModel sample_uniform_lps(const DeviceGraph& dev, Rng& rng, double hi = 1e-4);

// Unitary errors: per (gate, acted qubits) one random non-identity Pauli
// axis, rotated by a fixed angle with sin^2(theta/2) = target_infidelity.
ErrorModel sample_coherent_model(const DeviceGraph& dev, Rng& rng,
                                 double target_infidelity = 0.05);

// Base-rate triple of the gate at (layer, slot); zero for Idle and Z(0).
// Throws MissingRate if the model has no entry for a noisy gate.
PauliTriple base_triple(const ErrorModel& m, const Circuit& c, int layer, int slot);

// Context-dependent rates (GrowingPains layer modulation, DoubleTrouble
// consecutive-CNOT lift). This is what simulation consumes.
PauliTriple effective_triple(const ErrorModel& m, const Circuit& c, int layer, int slot);
double effective_rate(const ErrorModel& m, const Circuit& c, int layer, int slot, int axis);

double growing_pains_rate(double eps, int layer, double max_ratio, double tau);

std::string model_to_json(const ErrorModel& m);
ErrorModel model_from_json(const std::string& text);
void save_model(const ErrorModel& m, const std::string& path);
ErrorModel load_model(const std::string& path);

}  // namespace qcap
