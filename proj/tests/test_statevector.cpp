#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "qcap/circuit.hpp"
#include "qcap/statevector.hpp"

using namespace qcap;
using cd = std::complex<double>;

namespace {

constexpr double kEps = 1e-12;

bool close(cd a, cd b, double eps = kEps) { return std::abs(a - b) < eps; }

}  // namespace

TEST_CASE("initial state is |0...0>") {
  Statevector psi(3);
  REQUIRE(psi.amplitudes().size() == 8);
  CHECK(close(psi.amplitudes()[0], cd(1, 0)));
  for (size_t i = 1; i < 8; ++i) CHECK(close(psi.amplitudes()[i], cd(0, 0)));
  CHECK(psi.norm() == doctest::Approx(1.0));
}

TEST_CASE("zrot matches its closed form") {
  // exp(-i theta Z/2) = diag(e^{-i theta/2}, e^{+i theta/2}): it advances
  // the relative phase of |1> against |0> by exactly e^{i theta}.
  const double theta = kPi / 2;
  Statevector psi(1);
  psi.apply_xp(0);  // superposition with both amplitudes nonzero
  const cd before = psi.amplitudes()[1] / psi.amplitudes()[0];
  psi.apply_zrot(0, theta);
  const cd a0 = psi.amplitudes()[0];
  const cd a1 = psi.amplitudes()[1];
  CHECK(close(a1 / a0 / before, std::exp(cd(0, theta))));
  CHECK(std::abs(a0) == doctest::Approx(std::sqrt(0.5)));
  CHECK(std::abs(a1) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("xp and xm are inverse half rotations about X") {
  Statevector psi(1);
  psi.apply_xp(0);
  // exp(-i (pi/2) X / 2)|0> = (|0> - i|1>)/sqrt(2) up to global phase.
  const cd a0 = psi.amplitudes()[0];
  const cd a1 = psi.amplitudes()[1];
  CHECK(std::abs(a0) == doctest::Approx(std::sqrt(0.5)));
  CHECK(close(a1 / a0, cd(0, -1)));

  psi.apply_xm(0);
  CHECK(std::abs(psi.amplitudes()[0]) == doctest::Approx(1.0));
  CHECK(std::abs(psi.amplitudes()[1]) == doctest::Approx(0.0));

  // Two Xp make a bit flip (X up to phase).
  Statevector flip(1);
  flip.apply_xp(0);
  flip.apply_xp(0);
  CHECK(std::abs(flip.amplitudes()[0]) == doctest::Approx(0.0));
  CHECK(std::abs(flip.amplitudes()[1]) == doctest::Approx(1.0));
}

TEST_CASE("xp sends Z to -Y frame") {
  // After exp(-i pi X/4), <Y> of |0> becomes -1 (Bloch rotation about X).
  Statevector psi(1);
  psi.apply_xp(0);
  CHECK(psi.pauli_expectation({2}) == doctest::Approx(-1.0));
  CHECK(psi.pauli_expectation({3}) == doctest::Approx(0.0));

  Statevector m(1);
  m.apply_xm(0);
  CHECK(m.pauli_expectation({2}) == doctest::Approx(1.0));
}

TEST_CASE("cnot truth table") {
  // Little-endian: amplitude index bit i is qubit i.
  for (int c = 0; c < 2; ++c) {
    for (int t = 0; t < 2; ++t) {
      Statevector psi(2);
      if (c) { psi.apply_xp(0); psi.apply_xp(0); }
      if (t) { psi.apply_xp(1); psi.apply_xp(1); }
      psi.apply_cnot(0, 1);
      const int expect = c | ((t ^ c) << 1);
      CHECK(psi.basis_probability({expect & 1, expect >> 1}) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("cnot makes a bell pair from a plus state") {
  Statevector psi(2);
  psi.apply_xp(0);
  psi.apply_zrot(0, kPi / 2);  // |0> -> |+> up to phase
  psi.apply_cnot(0, 1);
  CHECK(psi.basis_probability({0, 0}) == doctest::Approx(0.5));
  CHECK(psi.basis_probability({1, 1}) == doctest::Approx(0.5));
  CHECK(psi.basis_probability({1, 0}) == doctest::Approx(0.0));
  CHECK(psi.basis_probability({0, 1}) == doctest::Approx(0.0));
  CHECK(psi.pauli_expectation({1, 1}) == doctest::Approx(1.0));   // XX
  CHECK(psi.pauli_expectation({3, 3}) == doctest::Approx(1.0));   // ZZ
  CHECK(psi.pauli_expectation({2, 2}) == doctest::Approx(-1.0));  // YY
  CHECK(psi.pauli_expectation({3, 0}) == doctest::Approx(0.0));
}

TEST_CASE("apply_1q with a hand-built Hadamard") {
  const double s = std::sqrt(0.5);
  const cd h[2][2] = {{cd(s, 0), cd(s, 0)}, {cd(s, 0), cd(-s, 0)}};
  Statevector psi(2);
  psi.apply_1q(1, h);
  CHECK(close(psi.amplitudes()[0], cd(s, 0)));
  CHECK(close(psi.amplitudes()[2], cd(s, 0)));
  psi.apply_1q(1, h);
  CHECK(close(psi.amplitudes()[0], cd(1, 0)));
}

TEST_CASE("apply_gate and apply_layer agree with direct calls") {
  Circuit c;
  c.n_device = 3;
  c.active = {0, 1, 2};
  c.layers.push_back({Gate::xp(), Gate::zrot(kPi / 2), Gate::xm()});
  c.layers.push_back({Gate::cnot_control(1), Gate::cnot_target(0), Gate::zrot(kPi)});

  Statevector via_layer(3);
  for (int l = 0; l < c.depth(); ++l) via_layer.apply_layer(c, l);

  Statevector direct(3);
  direct.apply_xp(0);
  direct.apply_zrot(1, kPi / 2);
  direct.apply_xm(2);
  direct.apply_cnot(0, 1);
  direct.apply_zrot(2, kPi);

  for (size_t i = 0; i < 8; ++i) CHECK(close(via_layer.amplitudes()[i], direct.amplitudes()[i]));

  Statevector via_gate(3);
  for (int l = 0; l < c.depth(); ++l)
    for (int s = 0; s < c.width(); ++s) via_gate.apply_gate(c, l, s);
  for (size_t i = 0; i < 8; ++i) CHECK(close(via_gate.amplitudes()[i], direct.amplitudes()[i]));
}

TEST_CASE("pauli rotation about Z matches apply_zrot") {
  for (double theta : {0.3, -1.1, kPi / 2}) {
    Statevector a(2), b(2);
    a.apply_xp(0);
    b.apply_xp(0);
    a.apply_zrot(0, theta);
    b.apply_pauli_rotation({3, 0}, theta);
    for (size_t i = 0; i < 4; ++i) CHECK(close(a.amplitudes()[i], b.amplitudes()[i]));
  }
}

TEST_CASE("pauli rotation about XX matches its closed form") {
  // exp(-i theta XX/2)|00> = cos(theta/2)|00> - i sin(theta/2)|11>.
  const double theta = 0.7;
  Statevector psi(2);
  psi.apply_pauli_rotation({1, 1}, theta);
  CHECK(close(psi.amplitudes()[0], cd(std::cos(theta / 2), 0)));
  CHECK(close(psi.amplitudes()[3], cd(0, -std::sin(theta / 2))));
  CHECK(close(psi.amplitudes()[1], cd(0, 0)));
  CHECK(close(psi.amplitudes()[2], cd(0, 0)));
}

TEST_CASE("identity pauli rotation is a global phase only") {
  Statevector psi(2);
  psi.apply_xp(0);
  const auto before = psi.amplitudes();
  psi.apply_pauli_rotation({0, 0}, 0.9);
  const cd phase = std::exp(cd(0, -0.45));
  for (size_t i = 0; i < 4; ++i) CHECK(close(psi.amplitudes()[i], phase * before[i]));
}

TEST_CASE("probabilities sum to one after random evolution") {
  Statevector psi(3);
  psi.apply_xp(0);
  psi.apply_zrot(1, kPi / 2);
  psi.apply_cnot(1, 2);
  psi.apply_pauli_rotation({1, 2, 3}, 0.37);
  double total = 0.0;
  for (int b = 0; b < 8; ++b) total += psi.basis_probability({b & 1, (b >> 1) & 1, (b >> 2) & 1});
  CHECK(total == doctest::Approx(1.0));
  CHECK(psi.norm() == doctest::Approx(1.0));
}
