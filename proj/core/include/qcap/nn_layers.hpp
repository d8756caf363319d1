#pragma once

#include <vector>

#include "qcap/encode.hpp"

namespace qcap {

// Shares the circuit-encoding layout: channel-last, flat index
// (row * cols + col) * ch + channel.
using Tensor3 = CircuitTensor;

inline Tensor3 make_tensor(int rows, int cols, int ch) {
  Tensor3 t;
  t.rows = rows;
  t.cols = cols;
  t.ch = ch;
  t.data.assign(static_cast<size_t>(rows) * static_cast<size_t>(cols) * static_cast<size_t>(ch),
                0.0);
  return t;
}

enum class Activation { None, Relu, Sigmoid, ExpNeg };
enum class PadMode { Same, Valid };
enum class PoolMode { Avg, Max };

double apply_activation(Activation a, double x);
// derivative through the activation given pre-activation x
double activation_grad(Activation a, double x);

// Same-padding offsets: output (i, j) covers input rows
// [i - pad_before(kw), ...] and likewise for columns, zeros outside. For
// even kernels the extra pad goes before, so a 1x2 kernel's window is
// (j-1, j): a pattern spanning two layers reports at the latter layer.
int pad_before(int k);

struct ConvShape {
  int rows, cols, ch;
};

ConvShape conv_output_shape(int in_rows, int in_cols, int n_kernels, int kw, int kd, PadMode pad);

// kernels: one Tensor3 of shape (kw, kd, in_ch) per output channel.
// out = f(cross-correlation + bias); pre (optional) receives the
// pre-activation values for backprop.
Tensor3 conv_forward(const Tensor3& in, const std::vector<Tensor3>& kernels,
                     const std::vector<double>& biases, PadMode pad, Activation act,
                     Tensor3* pre = nullptr);

// Gradients of a scalar loss: d_out is dL/d(output). Returns dL/d(input);
// accumulates dL/d(kernels) and dL/d(biases) into the provided buffers
// (which must be pre-sized and zeroed by the caller).
Tensor3 conv_backward(const Tensor3& d_out, const Tensor3& pre, const Tensor3& in,
                      const std::vector<Tensor3>& kernels, PadMode pad, Activation act,
                      std::vector<Tensor3>& d_kernels, std::vector<double>& d_biases);

struct PoolShape {
  int rows, cols;
};

PoolShape pool_output_shape(int in_rows, int in_cols, int pw, int pd);

// Non-overlapping (pw, pd) windows per channel; trailing partial windows
// are reduced over their actual size.
Tensor3 pool_forward(const Tensor3& in, int pw, int pd, PoolMode mode,
                     std::vector<int>* argmax = nullptr);

Tensor3 pool_backward(const Tensor3& d_out, const Tensor3& in, int pw, int pd, PoolMode mode,
                      const std::vector<int>& argmax);

// weights row-major: w[o * in_dim + i]; out = f(W v + b).
std::vector<double> dense_forward(const std::vector<double>& in, const std::vector<double>& w,
                                  const std::vector<double>& b, Activation act,
                                  std::vector<double>* pre = nullptr);

std::vector<double> dense_backward(const std::vector<double>& d_out,
                                   const std::vector<double>& pre, const std::vector<double>& in,
                                   const std::vector<double>& w, Activation act,
                                   std::vector<double>& d_w, std::vector<double>& d_b);

}  // namespace qcap
