#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "qcap/circuit.hpp"
#include "qcap/device.hpp"
#include "qcap/encode.hpp"
#include "qcap/errors.hpp"
#include "qcap/tableau.hpp"

using namespace qcap;
namespace fs = std::filesystem;

namespace {

// Sum of |values| over gate channels at one pixel.
double gate_mass(const CircuitTensor& t, int i, int j) {
  double m = 0.0;
  for (int k = 0; k < ChannelLayout::kGateChannels; ++k) m += std::abs(t.at(i, j, k));
  return m;
}

}  // namespace

TEST_CASE("channel names are distinct and ordered") {
  const auto& names = ChannelLayout::names();
  REQUIRE(names.size() == ChannelLayout::kChannels);
  for (size_t i = 0; i < names.size(); ++i)
    for (size_t j = i + 1; j < names.size(); ++j) CHECK(names[i] != names[j]);
}

TEST_CASE("one-qubit gates land in their channels") {
  const DeviceGraph dev = grid_device(1, 2);
  Circuit c;
  c.n_device = 2;
  c.active = {0, 1};
  c.layers.push_back({Gate::zrot(kPi / 2), Gate::xp()});
  c.layers.push_back({Gate::xm(), Gate::zrot(-kPi / 2)});
  c.layers.push_back({Gate::zrot(0.0), Gate::idle()});
  const CircuitTensor t = encode(c, dev, 4);
  REQUIRE(t.rows == 2);
  REQUIRE(t.cols == 4);
  REQUIRE(t.ch == 10);

  CHECK(t.at(0, 0, ChannelLayout::kZRot) == doctest::Approx(kPi / 2));
  CHECK(t.at(1, 0, ChannelLayout::kXp) == 1.0);
  CHECK(t.at(0, 1, ChannelLayout::kXm) == 1.0);
  CHECK(t.at(1, 1, ChannelLayout::kZRot) == doctest::Approx(-kPi / 2));

  // Z(0), Idle and padding are all-zero in the gate channels.
  CHECK(gate_mass(t, 0, 2) == 0.0);
  CHECK(gate_mass(t, 1, 2) == 0.0);
  CHECK(gate_mass(t, 0, 3) == 0.0);
  CHECK(gate_mass(t, 1, 3) == 0.0);

  // A gate pixel holds exactly one nonzero gate channel.
  CHECK(gate_mass(t, 0, 0) == doctest::Approx(kPi / 2));
  CHECK(gate_mass(t, 1, 0) == 1.0);
}

TEST_CASE("horizontal cnot uses left and right channels") {
  const DeviceGraph dev = grid_device(1, 2);
  Circuit c;
  c.n_device = 2;
  c.active = {0, 1};
  c.layers.push_back({Gate::cnot_control(1), Gate::cnot_target(0)});
  c.layers.push_back({Gate::cnot_target(1), Gate::cnot_control(0)});
  const CircuitTensor t = encode(c, dev, 2);

  // Layer 0: control q0 (partner right), target q1 (partner left).
  CHECK(t.at(0, 0, ChannelLayout::kCnotRight) == 1.0);
  CHECK(t.at(1, 0, ChannelLayout::kCnotLeft) == -1.0);
  CHECK(t.at(0, 0, ChannelLayout::kCnotLeft) == 0.0);
  CHECK(t.at(1, 0, ChannelLayout::kCnotRight) == 0.0);

  // Layer 1: direction flips with the roles.
  CHECK(t.at(0, 1, ChannelLayout::kCnotRight) == -1.0);
  CHECK(t.at(1, 1, ChannelLayout::kCnotLeft) == 1.0);
}

TEST_CASE("vertical cnot uses up and down channels") {
  const DeviceGraph dev = grid_device(2, 1);
  Circuit c;
  c.n_device = 2;
  c.active = {0, 1};
  c.layers.push_back({Gate::cnot_control(1), Gate::cnot_target(0)});
  const CircuitTensor t = encode(c, dev, 1);

  // q0 is row 0; its partner q1 sits one row down.
  CHECK(t.at(0, 0, ChannelLayout::kCnotDown) == 1.0);
  CHECK(t.at(1, 0, ChannelLayout::kCnotUp) == -1.0);
  CHECK(t.at(0, 0, ChannelLayout::kCnotUp) == 0.0);
  CHECK(t.at(1, 0, ChannelLayout::kCnotDown) == 0.0);
}

TEST_CASE("inactive device rows stay zero") {
  const DeviceGraph dev = t5_device();
  Circuit c;
  c.n_device = 5;
  c.active = {1, 3};
  c.layers.push_back({Gate::xp(), Gate::zrot(kPi)});
  const CircuitTensor t = encode(c, dev, 2);
  REQUIRE(t.rows == 5);
  CHECK(t.at(1, 0, ChannelLayout::kXp) == 1.0);
  CHECK(t.at(3, 0, ChannelLayout::kZRot) == doctest::Approx(kPi));
  for (int i : {0, 2, 4})
    for (int j = 0; j < t.cols; ++j) {
      CHECK(gate_mass(t, i, j) == 0.0);
      for (int k = ChannelLayout::kSensX; k <= ChannelLayout::kSensZ; ++k)
        CHECK(t.at(i, j, k) == 0.0);
    }
}

TEST_CASE("sensitivity channels copy the stabilizer analysis") {
  const DeviceGraph dev = t5_device();
  Circuit c;
  c.n_device = 5;
  c.active = {0, 1};
  c.layers.push_back({Gate::xp(), Gate::idle()});
  c.layers.push_back({Gate::cnot_control(1), Gate::cnot_target(0)});
  c.layers.push_back({Gate::xm(), Gate::zrot(kPi)});
  const CircuitTensor t = encode(c, dev, 5);
  const auto sens = sensitivity_channels(c);
  const int depth = c.depth();
  for (int s = 0; s < c.width(); ++s) {
    const int row = c.active[static_cast<size_t>(s)];
    for (int l = 0; l < depth; ++l)
      for (int a = 0; a < 3; ++a)
        CHECK(t.at(row, l, ChannelLayout::kSensX + a) ==
              static_cast<double>(sens[static_cast<size_t>((s * depth + l) * 3 + a)]));
  }
  // Padding columns carry no sensitivity.
  for (int j = depth; j < t.cols; ++j)
    for (int a = 0; a < 3; ++a) CHECK(t.at(0, j, ChannelLayout::kSensX + a) == 0.0);
}

TEST_CASE("encode rejects circuits that do not fit") {
  const DeviceGraph dev = grid_device(1, 2);
  Circuit c;
  c.n_device = 2;
  c.active = {0, 1};
  c.layers.push_back({Gate::idle(), Gate::idle()});
  c.layers.push_back({Gate::idle(), Gate::idle()});
  c.layers.push_back({Gate::idle(), Gate::idle()});
  CHECK_THROWS_AS(encode(c, dev, 2), DataError);
  CHECK_NOTHROW(encode(c, dev, 3));

  Circuit off;
  off.n_device = 9;
  off.active = {0, 8};
  off.layers.push_back({Gate::idle(), Gate::idle()});
  CHECK_THROWS_AS(encode(off, dev, 4), DataError);
}

TEST_CASE("strip_sensitivity keeps gate channels and drops the rest") {
  const DeviceGraph dev = grid_device(1, 2);
  Circuit c;
  c.n_device = 2;
  c.active = {0, 1};
  c.layers.push_back({Gate::cnot_control(1), Gate::cnot_target(0)});
  c.layers.push_back({Gate::xp(), Gate::zrot(kPi / 2)});
  const CircuitTensor full = encode(c, dev, 3);
  const CircuitTensor lean = strip_sensitivity(full);
  REQUIRE(lean.ch == ChannelLayout::kGateChannels);
  REQUIRE(lean.rows == full.rows);
  REQUIRE(lean.cols == full.cols);
  for (int i = 0; i < full.rows; ++i)
    for (int j = 0; j < full.cols; ++j)
      for (int k = 0; k < ChannelLayout::kGateChannels; ++k)
        CHECK(lean.at(i, j, k) == full.at(i, j, k));
  CHECK_THROWS_AS(strip_sensitivity(lean), AlreadyStripped);
}

TEST_CASE("tensor bytes round trip") {
  const DeviceGraph dev = t5_device();
  Circuit c;
  c.n_device = 5;
  c.active = {0, 1, 2, 3, 4};
  c.layers.push_back({Gate::xp(), Gate::zrot(-kPi / 2), Gate::xm(), Gate::zrot(kPi), Gate::idle()});
  c.layers.push_back({Gate::cnot_control(1), Gate::cnot_target(0), Gate::zrot(0.0), Gate::xp(), Gate::xm()});
  const CircuitTensor t = encode(c, dev, 6);
  const std::string bytes = tensor_to_bytes(t);
  const CircuitTensor back = tensor_from_bytes(bytes);
  CHECK(back == t);

  const CircuitTensor lean = strip_sensitivity(t);
  CHECK(tensor_from_bytes(tensor_to_bytes(lean)) == lean);
}

TEST_CASE("tensor file round trip") {
  const DeviceGraph dev = grid_device(1, 2);
  Circuit c;
  c.n_device = 2;
  c.active = {0, 1};
  c.layers.push_back({Gate::xp(), Gate::xm()});
  const CircuitTensor t = encode(c, dev, 2);
  const fs::path path = fs::temp_directory_path() / "qcap_tensor_test.bin";
  save_tensor(t, path.string());
  const CircuitTensor back = load_tensor(path.string());
  fs::remove(path);
  CHECK(back == t);
}

TEST_CASE("corrupted tensor bytes are rejected") {
  const DeviceGraph dev = grid_device(1, 2);
  Circuit c;
  c.n_device = 2;
  c.active = {0, 1};
  c.layers.push_back({Gate::xp(), Gate::xm()});
  std::string bytes = tensor_to_bytes(encode(c, dev, 2));
  std::string bad_magic = bytes;
  bad_magic[0] = 'x';
  CHECK_THROWS_AS(tensor_from_bytes(bad_magic), DataError);
  CHECK_THROWS_AS(tensor_from_bytes(bytes.substr(0, bytes.size() / 2)), DataError);
  CHECK_THROWS_AS(tensor_from_bytes(std::string{}), DataError);
}

TEST_CASE("debug text mentions shape") {
  const DeviceGraph dev = grid_device(1, 2);
  Circuit c;
  c.n_device = 2;
  c.active = {0, 1};
  c.layers.push_back({Gate::xp(), Gate::idle()});
  const std::string text = tensor_debug_text(encode(c, dev, 3));
  CHECK(text.find('2') != std::string::npos);
  CHECK(text.find('3') != std::string::npos);
}
