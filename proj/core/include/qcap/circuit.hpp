#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qcap/device.hpp"

namespace qcap {

inline constexpr double kPi = 3.14159265358979323846;

// Allowed ZRot angles, in canonical order.
inline const std::vector<double>& zrot_angles() {
  static const std::vector<double> angles{-kPi / 2, 0.0, kPi / 2, kPi};
  return angles;
}

enum class GateKind {
  Idle,
  ZRot,
  Xp,  // x-axis rotation by +pi/2
  Xm,  // x-axis rotation by -pi/2
  CnotControl,
  CnotTarget,
};

struct Gate {
  GateKind kind = GateKind::Idle;
  double theta = 0.0;  // ZRot only
  int partner = -1;    // device qubit id, Cnot* only

  static Gate idle() { return {}; }
  static Gate zrot(double theta) { return {GateKind::ZRot, theta, -1}; }
  static Gate xp() { return {GateKind::Xp, 0.0, -1}; }
  static Gate xm() { return {GateKind::Xm, 0.0, -1}; }
  static Gate cnot_control(int target) { return {GateKind::CnotControl, 0.0, target}; }
  static Gate cnot_target(int control) { return {GateKind::CnotTarget, 0.0, control}; }

  bool operator==(const Gate& o) const {
    return kind == o.kind && theta == o.theta && partner == o.partner;
  }
};

// One gate per active qubit, aligned with Circuit::active.
using Layer = std::vector<Gate>;

// A circuit over an ordered subset of device qubits. Width is the subset
// size, depth the layer count. Idle is an explicit gate, so every (active
// qubit, layer) location exists.
struct Circuit {
  int n_device = 0;
  std::vector<int> active;
  std::vector<Layer> layers;

  int width() const { return static_cast<int>(active.size()); }
  int depth() const { return static_cast<int>(layers.size()); }
  // Position of device qubit q within active, or -1.
  int slot_of(int q) const;

  bool operator==(const Circuit& o) const {
    return n_device == o.n_device && active == o.active && layers == o.layers;
  }
};

bool is_allowed_zrot_angle(double theta);

// Gate-level and structural checks against a device: distinct in-range
// active qubits, rectangular layers, allowed angles, mutual CNOT pairing
// along directed device edges. Returns violation messages; empty = valid.
std::vector<std::string> validate_circuit(const Circuit& c, const DeviceGraph& dev);

// Text format: a "qubits: q0,q1,..." header then one line per layer with one
// whitespace-separated token per active qubit, in header order. Tokens:
//   I | Z(-pi/2) | Z(0) | Z(pi/2) | Z(pi) | Xp | Xm | C:q<target> | T:q<control>
// A header with no layer lines is a valid depth-0 circuit.
std::string serialize_circuit(const Circuit& c);
Circuit parse_circuit(const std::string& text, int n_device);

// Layer-by-layer inverse: reversed layer order, each gate inverted in place
// (ZRot(theta) -> ZRot(-theta) with pi -> pi, Xp <-> Xm, Cnot and Idle fixed).
Circuit inverse_circuit(const Circuit& c);
Gate inverse_gate(const Gate& g);

}  // namespace qcap
