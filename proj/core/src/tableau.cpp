#include "qcap/tableau.hpp"

#include <bit>
#include <cmath>

#include "qcap/errors.hpp"

namespace qcap {
namespace {

// i-exponent of W_a * W_b = i^k W_{a xor b} for axes I=0, X=1, Y=2, Z=3
// indexed by the (x,z) encoding: I=(0,0)->0, X=(1,0)->1, Y=(1,1)->3?  To keep
// the table readable it is indexed by axis number instead.
constexpr int kMulPhase[4][4] = {
    // I  X  Y  Z   (right factor)
    {0, 0, 0, 0},  // I
    {0, 0, 1, 3},  // X: XY=iZ, XZ=-iY
    {0, 3, 0, 1},  // Y: YX=-iZ, YZ=iX
    {0, 1, 3, 0},  // Z: ZX=iY, ZY=-iX
};

int axis_from_bits(int xb, int zb) {
  if (xb && zb) return 2;
  if (xb) return 1;
  if (zb) return 3;
  return 0;
}

}  // namespace

PauliString PauliString::single(int n, int qubit, int axis) {
  PauliString p = identity(n);
  const uint64_t bit = uint64_t{1} << qubit;
  if (axis == 1 || axis == 2) p.x |= bit;
  if (axis == 2 || axis == 3) p.z |= bit;
  return p;
}

int PauliString::axis_of(int qubit) const {
  const uint64_t bit = uint64_t{1} << qubit;
  return axis_from_bits((x & bit) != 0, (z & bit) != 0);
}

bool PauliString::commutes_with(const PauliString& o) const {
  const int anti = std::popcount(x & o.z) + std::popcount(z & o.x);
  return (anti & 1) == 0;
}

PauliString PauliString::times(const PauliString& o) const {
  PauliString r;
  r.n = n;
  r.x = x ^ o.x;
  r.z = z ^ o.z;
  int ph = phase + o.phase;
  uint64_t overlap = (x | z) & (o.x | o.z);
  while (overlap) {
    const int q = std::countr_zero(overlap);
    overlap &= overlap - 1;
    ph += kMulPhase[axis_of(q)][o.axis_of(q)];
  }
  r.phase = ph & 3;
  return r;
}

int PauliString::sign() const {
  if (phase == 0) return 1;
  if (phase == 2) return -1;
  throw NumericalError("pauli phase is imaginary where a sign was expected");
}

std::string PauliString::to_string() const {
  static const char* prefix[4] = {"+", "+i", "-", "-i"};
  std::string s = prefix[phase & 3];
  static const char axes[] = "IXYZ";
  for (int q = 0; q < n; ++q) s += axes[axis_of(q)];
  return s;
}

namespace {

void conj_zrot(PauliString& p, int q, double theta) {
  const uint64_t bit = uint64_t{1} << q;
  if (!(p.x & bit)) return;  // Z and I are fixed by z rotations
  const bool is_y = (p.z & bit) != 0;
  if (std::abs(theta) < 1e-9) return;
  if (std::abs(theta - kPi) < 1e-9) {
    // Z: X -> -X, Y -> -Y
    p.phase = (p.phase + 2) & 3;
  } else if (std::abs(theta - kPi / 2) < 1e-9) {
    // X -> Y, Y -> -X
    if (is_y) {
      p.z &= ~bit;
      p.phase = (p.phase + 2) & 3;
    } else {
      p.z |= bit;
    }
  } else if (std::abs(theta + kPi / 2) < 1e-9) {
    // X -> -Y, Y -> X
    if (is_y) {
      p.z &= ~bit;
    } else {
      p.z |= bit;
      p.phase = (p.phase + 2) & 3;
    }
  } else {
    throw DataError("ZRot angle not in allowed set");
  }
}

void conj_xp(PauliString& p, int q) {
  const uint64_t bit = uint64_t{1} << q;
  if (!(p.z & bit)) return;  // X and I fixed by x rotations
  if (p.x & bit) {
    // Y -> Z
    p.x &= ~bit;
  } else {
    // Z -> -Y
    p.x |= bit;
    p.phase = (p.phase + 2) & 3;
  }
}

void conj_xm(PauliString& p, int q) {
  const uint64_t bit = uint64_t{1} << q;
  if (!(p.z & bit)) return;
  if (p.x & bit) {
    // Y -> -Z
    p.x &= ~bit;
    p.phase = (p.phase + 2) & 3;
  } else {
    // Z -> Y
    p.x |= bit;
  }
}

void conj_cnot(PauliString& p, int control, int target) {
  const uint64_t cbit = uint64_t{1} << control;
  const uint64_t tbit = uint64_t{1} << target;
  const bool xc = p.x & cbit, zc = p.z & cbit;
  const bool xt = p.x & tbit, zt = p.z & tbit;
  if (xc && zt && (xt == zc)) p.phase = (p.phase + 2) & 3;
  if (xc) p.x ^= tbit;
  if (zt) p.z ^= cbit;
}

}  // namespace

void conjugate_through_layer(PauliString& p, const Circuit& c, int layer) {
  const Layer& lay = c.layers[static_cast<size_t>(layer)];
  for (size_t s = 0; s < lay.size(); ++s) {
    const Gate& g = lay[s];
    const int q = static_cast<int>(s);
    switch (g.kind) {
      case GateKind::Idle: break;
      case GateKind::ZRot: conj_zrot(p, q, g.theta); break;
      case GateKind::Xp: conj_xp(p, q); break;
      case GateKind::Xm: conj_xm(p, q); break;
      case GateKind::CnotControl: conj_cnot(p, q, c.slot_of(g.partner)); break;
      case GateKind::CnotTarget: break;
    }
  }
}

PauliString propagate_pauli(const Circuit& c, const PauliString& p, int from_layer) {
  if (from_layer < 0 || from_layer > c.depth()) throw DataError("propagate_pauli layer out of range");
  PauliString out = p;
  for (int l = from_layer; l < c.depth(); ++l) conjugate_through_layer(out, c, l);
  return out;
}

StabilizerTableau::StabilizerTableau(int n_qubits) : n_(n_qubits) {
  if (n_ < 1 || n_ > 64) throw ConfigError("tableau width out of range");
  stab_.reserve(static_cast<size_t>(n_));
  destab_.reserve(static_cast<size_t>(n_));
  for (int i = 0; i < n_; ++i) {
    stab_.push_back(PauliString::single(n_, i, 3));
    destab_.push_back(PauliString::single(n_, i, 1));
  }
}

void StabilizerTableau::apply_layer(const Circuit& c, int layer) {
  for (auto& row : stab_) conjugate_through_layer(row, c, layer);
  for (auto& row : destab_) conjugate_through_layer(row, c, layer);
}

int StabilizerTableau::pauli_expectation(const PauliString& p) const {
  for (const auto& row : stab_)
    if (!p.commutes_with(row)) return 0;
  PauliString acc = PauliString::identity(n_);
  for (int k = 0; k < n_; ++k)
    if (!p.commutes_with(destab_[static_cast<size_t>(k)])) acc = acc.times(stab_[static_cast<size_t>(k)]);
  if (acc.x != p.x || acc.z != p.z)
    throw NumericalError("stabilizer decomposition does not reproduce the query pauli");
  const int diff = (p.phase - acc.phase) & 3;
  if (diff == 0) return 1;
  if (diff == 2) return -1;
  throw NumericalError("stabilizer sign resolution produced an imaginary phase");
}

std::vector<int> success_bitstring(const Circuit& c) {
  StabilizerTableau tab(c.width());
  for (int l = 0; l < c.depth(); ++l) tab.apply_layer(c, l);
  std::vector<int> bits(static_cast<size_t>(c.width()));
  for (int i = 0; i < c.width(); ++i) {
    const int e = tab.pauli_expectation(PauliString::single(c.width(), i, 3));
    if (e == 0)
      throw NotDefiniteOutcome("qubit slot " + std::to_string(i) +
                               " has no definite measurement outcome");
    bits[static_cast<size_t>(i)] = (1 - e) / 2;
  }
  return bits;
}

std::vector<uint8_t> sensitivity_channels(const Circuit& c) {
  const int w = c.width();
  const int d = c.depth();
  std::vector<uint8_t> sens(static_cast<size_t>(w) * static_cast<size_t>(d) * 3, 0);
  StabilizerTableau tab(w);
  for (int l = 0; l < d; ++l) {
    tab.apply_layer(c, l);
    for (int s = 0; s < w; ++s) {
      for (int a = 0; a < 3; ++a) {
        const int e = tab.pauli_expectation(PauliString::single(w, s, a + 1));
        sens[(static_cast<size_t>(s) * static_cast<size_t>(d) + static_cast<size_t>(l)) * 3 +
             static_cast<size_t>(a)] = e == 0 ? 1 : 0;
      }
    }
  }
  return sens;
}

}  // namespace qcap
