#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcap/circuit.hpp"

namespace qcap {

// Hermitian Pauli operator i^phase * prod_q W_q on up to 64 qubits, with
// W_q in {I, X, Y, Z} encoded by bit pairs: (x,z) = (0,0) I, (1,0) X,
// (1,1) Y, (0,1) Z. phase is an exponent of i mod 4; conjugation by
// Cliffords keeps it even (sign +/- 1), multiplication may make it odd.
struct PauliString {
  int n = 0;
  uint64_t x = 0;
  uint64_t z = 0;
  int phase = 0;

  static PauliString identity(int n) { return {n, 0, 0, 0}; }
  // axis: 1 = X, 2 = Y, 3 = Z
  static PauliString single(int n, int qubit, int axis);

  int axis_of(int qubit) const;
  bool is_identity() const { return x == 0 && z == 0; }
  bool commutes_with(const PauliString& o) const;
  PauliString times(const PauliString& o) const;
  // +1 for phase 0, -1 for phase 2; phase must be even.
  int sign() const;
  std::string to_string() const;

  bool operator==(const PauliString& o) const {
    return n == o.n && x == o.x && z == o.z && phase == o.phase;
  }
};

// In-place conjugation P -> U P U^dagger for the layer's gates. Qubit
// indices are circuit slots (positions in Circuit::active).
void conjugate_through_layer(PauliString& p, const Circuit& c, int layer);

// C_rest P C_rest^dagger where C_rest applies layers [from_layer, depth).
// from_layer == depth returns p unchanged.
PauliString propagate_pauli(const Circuit& c, const PauliString& p, int from_layer);

// Stabilizer state over the active slots of a circuit, tracked as n
// stabilizer and n destabilizer generators from |0...0>.
class StabilizerTableau {
 public:
  explicit StabilizerTableau(int n_qubits);

  int n() const { return n_; }
  void apply_layer(const Circuit& c, int layer);

  // <psi| P |psi> for stabilizer states: exactly -1, 0, or +1.
  int pauli_expectation(const PauliString& p) const;

  const std::vector<PauliString>& stabilizers() const { return stab_; }
  const std::vector<PauliString>& destabilizers() const { return destab_; }

 private:
  int n_;
  std::vector<PauliString> stab_;
  std::vector<PauliString> destab_;
};

// Ideal output bits of a definite-outcome circuit: bit i = (1 - <Z_i>)/2
// after all layers. Throws NotDefiniteOutcome if any <Z_i> is 0.
std::vector<int> success_bitstring(const Circuit& c);

// sens[(slot * depth + layer) * 3 + a] for axis a in {X, Y, Z} order:
// 0 when the state after `layer` is an eigenstate of the single-qubit Pauli
// (the error there is harmless), 1 otherwise.
std::vector<uint8_t> sensitivity_channels(const Circuit& c);

}  // namespace qcap
