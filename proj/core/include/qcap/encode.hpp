#pragma once

#include <string>
#include <vector>

#include "qcap/circuit.hpp"
#include "qcap/device.hpp"

namespace qcap {

// Channel order of the circuit-tensor encoding. The first seven channels
// describe the gate at each (qubit, layer) pixel; the last three are Pauli
// sensitivities of the state after that layer. Padding (inactive qubits,
// layers beyond the circuit) is zero in every channel, and a Z(0) pixel is
// all-zero too, indistinguishable from Idle.
struct ChannelLayout {
  static constexpr int kZRot = 0;      // value: theta
  static constexpr int kXp = 1;        // value: 1
  static constexpr int kXm = 2;        // value: 1
  static constexpr int kCnotLeft = 3;  // partner one column left; +1 control, -1 target
  static constexpr int kCnotRight = 4;
  static constexpr int kCnotUp = 5;  // partner one row up (smaller row index)
  static constexpr int kCnotDown = 6;
  static constexpr int kSensX = 7;
  static constexpr int kSensY = 8;
  static constexpr int kSensZ = 9;
  static constexpr int kGateChannels = 7;
  static constexpr int kChannels = 10;
  static const std::vector<std::string>& names();
};

struct CircuitTensor {
  int rows = 0;   // device qubit count
  int cols = 0;   // d_max
  int ch = 0;     // 10, or 7 after strip_sensitivity
  std::vector<double> data;  // (row * cols + col) * ch + channel

  double& at(int i, int j, int k) {
    return data[(static_cast<size_t>(i) * static_cast<size_t>(cols) + static_cast<size_t>(j)) *
                    static_cast<size_t>(ch) +
                static_cast<size_t>(k)];
  }
  double at(int i, int j, int k) const {
    return data[(static_cast<size_t>(i) * static_cast<size_t>(cols) + static_cast<size_t>(j)) *
                    static_cast<size_t>(ch) +
                static_cast<size_t>(k)];
  }

  bool operator==(const CircuitTensor& o) const {
    return rows == o.rows && cols == o.cols && ch == o.ch && data == o.data;
  }
};

// Encode a circuit into rows = device size, cols = d_max, ch = 10. Throws
// DataError if the circuit is deeper than d_max or uses qubits off the device.
CircuitTensor encode(const Circuit& c, const DeviceGraph& dev, int d_max);

// Remove the three sensitivity channels (ablation input). Throws
// AlreadyStripped when the tensor has no sensitivity channels.
CircuitTensor strip_sensitivity(const CircuitTensor& t);

// Binary format with header (magic, version, dims, channel names) and
// little-endian float64 payload; round-trips bit-exactly.
std::string tensor_to_bytes(const CircuitTensor& t);
CircuitTensor tensor_from_bytes(const std::string& bytes);
void save_tensor(const CircuitTensor& t, const std::string& path);
CircuitTensor load_tensor(const std::string& path);

// Human-readable dump for debugging.
std::string tensor_debug_text(const CircuitTensor& t);

}  // namespace qcap
