#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qcap/capability.hpp"
#include "qcap/circuit.hpp"
#include "qcap/device.hpp"

namespace qcap {

// Error rates model: one scalar success-reducing rate per one-qubit gate
// class and qubit, per directed CNOT edge, and per readout. Predicts
// s(c) as the product of (1 - rate) over the gates in the circuit and the
// readouts of its active qubits.
struct ErmParams {
  // (gate class, qubit) -> rate; classes as in GateClass
  std::map<std::pair<int, int>, double> one_qubit;
  // (control, target) -> rate, counted once per CNOT instance
  std::map<std::pair<int, int>, double> cnot;
  // per device qubit
  std::vector<double> readout;

  size_t parameter_count() const {
    return one_qubit.size() + cnot.size() + readout.size();
  }
};

// Product formula. Idle and Z(0) contribute factor 1; a CNOT contributes a
// single factor keyed by its directed edge. Throws MissingRate lazily, at
// the first gate whose rate is absent.
double erm_predict(const ErmParams& p, const Circuit& c);

// Every key the device supports, all rates at init_rate.
ErmParams init_erm_for_device(const DeviceGraph& dev, double init_rate = 0.0);

struct ErmFitConfig {
  double learning_rate = 0.02;
  int max_iterations = 20000;
  double gradient_tolerance = 1e-7;
  double init_rate = 0.005;
  // splits whose records enter the fit
  std::vector<std::string> splits{"train"};
};

struct ErmFitResult {
  ErmParams params;   // best iterate by training loss
  double loss = 0.0;  // average binary cross-entropy at the best iterate
  int iterations = 0;
  bool converged = false;  // gradient norm fell below tolerance
};

// Maximum-likelihood fit (average-BCE minimization, full-batch Adam on
// logit-transformed rates). Deterministic. Returns the best iterate even
// when the gradient tolerance was not reached.
ErmFitResult fit_erm(const CapabilityDataset& ds, const ErmFitConfig& cfg = {});

std::string erm_to_json(const ErmParams& p, const DeviceGraph& dev);
ErmParams erm_from_json(const std::string& text, const DeviceGraph& dev);
void save_erm(const ErmParams& p, const DeviceGraph& dev, const std::string& path);
// d-ERM loader: externally supplied rates for a device. Validates bounds
// ([0, 1) per rate) and the device hash; missing keys surface at predict.
ErmParams load_device_erm(const std::string& path, const DeviceGraph& dev);

}  // namespace qcap
