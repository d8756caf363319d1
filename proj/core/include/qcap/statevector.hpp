#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "qcap/circuit.hpp"

namespace qcap {

// Dense simulator over the active qubits of a circuit; slot i of
// Circuit::active is state qubit i (little-endian: amplitude index bit i).
// Small widths only; used as the exact oracle for the stabilizer engine and
// as the labelling backend for coherent error models.
class Statevector {
 public:
  explicit Statevector(int n_qubits);

  int n() const { return n_; }
  const std::vector<std::complex<double>>& amplitudes() const { return amp_; }

  void apply_1q(int q, const std::complex<double> u[2][2]);
  void apply_zrot(int q, double theta);
  void apply_xp(int q);
  void apply_xm(int q);
  void apply_cnot(int control, int target);
  void apply_gate(const Circuit& c, int layer, int slot);
  void apply_layer(const Circuit& c, int layer);

  // exp(-i theta P / 2) for a Pauli P given by per-qubit axes
  // (0 = I, 1 = X, 2 = Y, 3 = Z).
  void apply_pauli_rotation(const std::vector<int>& axes, double theta);

  // <psi| P |psi>; real for Hermitian P.
  double pauli_expectation(const std::vector<int>& axes) const;

  // Probability of measuring the given bits (bits[i] for state qubit i).
  double basis_probability(const std::vector<int>& bits) const;

  double norm() const;

 private:
  int n_;
  std::vector<std::complex<double>> amp_;
};

}  // namespace qcap
