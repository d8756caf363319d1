#pragma once

#include <vector>

#include "qcap/device.hpp"
#include "qcap/nn_model.hpp"
#include "qcap/noise.hpp"

namespace qcap {

// Hand-built network that reproduces the no-cancellation product formula
// for a base local-Pauli-stochastic model. One full-height valid conv layer
// holds, per (qubit, gate class, Pauli axis) and per (directed CNOT edge,
// acted side, axis), filters whose ReLU maps recover -log(1 - rate) exactly
// at each (sensitive location, matching gate) pixel; a signed sum plus the
// readout bias feeds an exp(-x) head, so the output equals the analytic
// product up to float rounding. `active` defaults to every device qubit and
// selects which readout factors the head's bias includes.
CnnModel build_lps_reference_network(const ErrorModel& m, const DeviceGraph& dev, int d_max,
                                     const std::vector<int>& active = {});

// The four 1 x 2 x channels kernels (weights +-1/2 in the CNOT channels,
// bias -1/2). With same padding, map m at (i, j) is 1/2 exactly when qubit
// i has a CNOT in layers j-1 and j whose channel signs match kernel m, so
// the bank jointly flags every consecutive-CNOT pixel at the latter layer.
struct CnotFilterBank {
  std::vector<Tensor3> kernels;
  std::vector<double> biases;
};

CnotFilterBank build_sequential_cnot_filters(int channels = ChannelLayout::kChannels);

// Convenience: ReLU feature maps of the filter bank on an encoded circuit.
std::vector<Tensor3> apply_cnot_filters(const CnotFilterBank& bank, const Tensor3& image);

}  // namespace qcap
