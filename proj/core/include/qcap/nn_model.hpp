#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcap/nn_layers.hpp"

namespace qcap {

struct LayerSpec {
  enum class Kind { Conv, Pool, Flatten, Dense };
  Kind kind = Kind::Conv;
  // Conv
  int kernels = 0, kw = 0, kd = 0;
  PadMode pad = PadMode::Same;
  // Pool
  int pw = 0, pd = 0;
  PoolMode pool = PoolMode::Avg;
  // Dense
  int units = 0;
  Activation act = Activation::None;

  static LayerSpec conv(int kernels, int kw, int kd, Activation act = Activation::Relu,
                        PadMode pad = PadMode::Same);
  static LayerSpec pool_avg(int pw, int pd);
  static LayerSpec pool_max(int pw, int pd);
  static LayerSpec flatten();
  static LayerSpec dense(int units, Activation act);

  bool operator==(const LayerSpec& o) const;
};

struct CnnSpec {
  int rows = 0, cols = 0, channels = 0;  // input shape
  std::vector<LayerSpec> layers;
  int epochs = 50;
  int batch = 32;
  int patience = 0;  // 0 = run all epochs
  double learning_rate = 1e-3;
  uint64_t seed = 0;

  bool operator==(const CnnSpec& o) const;
};

// Enforces the fixed skeleton: zero or more Conv/Pool blocks, one Flatten,
// one or more Dense layers, the last being a single unit with a Sigmoid
// (or the reference networks' ExpNeg) activation. Throws ConfigError.
void validate_spec(const CnnSpec& spec);

// Output shape after each layer; for Flatten/Dense rows = the vector
// length, cols = ch = 1.
std::vector<ConvShape> infer_shapes(const CnnSpec& spec);

size_t parameter_count(const CnnSpec& spec);

struct EpochStats {
  double train_loss = 0.0;
  double validate_loss = 0.0;
};

struct CnnModel {
  CnnSpec spec;
  std::vector<double> params;  // fixed layout, see layer_param_layout
  std::vector<EpochStats> history;
};

// (offset, count) into CnnModel::params per layer; zero-sized for
// Pool/Flatten. Conv layers store kernels then biases; Dense layers store
// the row-major weight matrix then biases.
std::vector<std::pair<size_t, size_t>> layer_param_layout(const CnnSpec& spec);

// Fan-in scaled uniform init (U(+-sqrt(6/fan_in))), biases zero, seeded
// from spec.seed.
CnnModel init_model(const CnnSpec& spec);

double forward(const CnnModel& m, const Tensor3& in);

struct BatchGradient {
  double loss = 0.0;  // average binary cross-entropy over the batch
  std::vector<double> grad;
};

// Average BCE with predictions clamped to [1e-7, 1 - 1e-7] inside the loss
// only; the gradient flows through the unclamped sigmoid (analytically
// p - y at the final pre-activation). Deterministic for any jobs value.
BatchGradient loss_and_gradients(const CnnModel& m, const std::vector<const Tensor3*>& xs,
                                 const std::vector<double>& ys, int jobs = 1);

double bce_loss(double label, double prediction);

std::string spec_to_json(const CnnSpec& spec);
CnnSpec spec_from_json(const std::string& text);

// Binary model file: magic + version header, JSON spec, one checksummed
// little-endian weight block per parameterized layer, training history.
void save_cnn(const CnnModel& m, const std::string& path);
CnnModel load_cnn(const std::string& path);

}  // namespace qcap
