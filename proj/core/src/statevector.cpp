#include "qcap/statevector.hpp"

#include <bit>
#include <cmath>

#include "qcap/errors.hpp"

namespace qcap {

namespace {
using cd = std::complex<double>;
constexpr cd kI{0.0, 1.0};
}  // namespace

Statevector::Statevector(int n_qubits) : n_(n_qubits) {
  if (n_ < 1 || n_ > 24) throw ConfigError("statevector width out of range");
  amp_.assign(size_t{1} << n_, cd{0.0, 0.0});
  amp_[0] = 1.0;
}

void Statevector::apply_1q(int q, const cd u[2][2]) {
  const size_t bit = size_t{1} << q;
  for (size_t i = 0; i < amp_.size(); ++i) {
    if (i & bit) continue;
    const cd a0 = amp_[i];
    const cd a1 = amp_[i | bit];
    amp_[i] = u[0][0] * a0 + u[0][1] * a1;
    amp_[i | bit] = u[1][0] * a0 + u[1][1] * a1;
  }
}

void Statevector::apply_zrot(int q, double theta) {
  const cd u[2][2] = {{std::exp(-kI * (theta / 2)), 0.0}, {0.0, std::exp(kI * (theta / 2))}};
  apply_1q(q, u);
}

void Statevector::apply_xp(int q) {
  const double r = 1.0 / std::sqrt(2.0);
  const cd u[2][2] = {{r, -kI * r}, {-kI * r, r}};
  apply_1q(q, u);
}

void Statevector::apply_xm(int q) {
  const double r = 1.0 / std::sqrt(2.0);
  const cd u[2][2] = {{r, kI * r}, {kI * r, r}};
  apply_1q(q, u);
}

void Statevector::apply_cnot(int control, int target) {
  const size_t cbit = size_t{1} << control;
  const size_t tbit = size_t{1} << target;
  for (size_t i = 0; i < amp_.size(); ++i)
    if ((i & cbit) && !(i & tbit)) std::swap(amp_[i], amp_[i | tbit]);
}

void Statevector::apply_gate(const Circuit& c, int layer, int slot) {
  const Gate& g = c.layers[static_cast<size_t>(layer)][static_cast<size_t>(slot)];
  switch (g.kind) {
    case GateKind::Idle: break;
    case GateKind::ZRot: apply_zrot(slot, g.theta); break;
    case GateKind::Xp: apply_xp(slot); break;
    case GateKind::Xm: apply_xm(slot); break;
    case GateKind::CnotControl: apply_cnot(slot, c.slot_of(g.partner)); break;
    case GateKind::CnotTarget: break;  // applied from the control side
  }
}

void Statevector::apply_layer(const Circuit& c, int layer) {
  for (int s = 0; s < c.width(); ++s) apply_gate(c, layer, s);
}

void Statevector::apply_pauli_rotation(const std::vector<int>& axes, double theta) {
  // exp(-i theta P / 2) = cos(theta/2) I - i sin(theta/2) P
  size_t xmask = 0, flipsign = 0;
  int n_y = 0;
  for (size_t q = 0; q < axes.size(); ++q) {
    const size_t bit = size_t{1} << q;
    switch (axes[q]) {
      case 0: break;
      case 1: xmask |= bit; break;
      case 2: xmask |= bit; flipsign |= bit; ++n_y; break;
      case 3: flipsign |= bit; break;
      default: throw ConfigError("bad pauli axis");
    }
  }
  const cd c = std::cos(theta / 2);
  const cd s = -kI * std::sin(theta / 2);
  cd ypow{1.0, 0.0};
  for (int k = 0; k < n_y; ++k) ypow *= kI;
  std::vector<cd> out(amp_.size());
  for (size_t b = 0; b < amp_.size(); ++b) {
    // P|b> = ypow * (-1)^{popcount(b & flipsign)} |b ^ xmask>
    const double sign = (std::popcount(b & flipsign) & 1) ? -1.0 : 1.0;
    out[b ^ xmask] += s * ypow * sign * amp_[b];
  }
  for (size_t b = 0; b < amp_.size(); ++b) amp_[b] = c * amp_[b] + out[b];
}

double Statevector::pauli_expectation(const std::vector<int>& axes) const {
  size_t xmask = 0, flipsign = 0;
  int n_y = 0;
  for (size_t q = 0; q < axes.size(); ++q) {
    const size_t bit = size_t{1} << q;
    switch (axes[q]) {
      case 0: break;
      case 1: xmask |= bit; break;
      case 2: xmask |= bit; flipsign |= bit; ++n_y; break;
      case 3: flipsign |= bit; break;
      default: throw ConfigError("bad pauli axis");
    }
  }
  cd ypow{1.0, 0.0};
  for (int k = 0; k < n_y; ++k) ypow *= kI;
  cd acc{0.0, 0.0};
  for (size_t b = 0; b < amp_.size(); ++b) {
    const double sign = (std::popcount(b & flipsign) & 1) ? -1.0 : 1.0;
    acc += std::conj(amp_[b ^ xmask]) * ypow * sign * amp_[b];
  }
  return acc.real();
}

double Statevector::basis_probability(const std::vector<int>& bits) const {
  size_t idx = 0;
  for (size_t q = 0; q < bits.size(); ++q)
    if (bits[q]) idx |= size_t{1} << q;
  return std::norm(amp_[idx]);
}

double Statevector::norm() const {
  double s = 0.0;
  for (const auto& a : amp_) s += std::norm(a);
  return std::sqrt(s);
}

}  // namespace qcap
