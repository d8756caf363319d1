#include "qcap/nn_layers.hpp"

#include <algorithm>
#include <cmath>

#include "qcap/errors.hpp"

namespace qcap {

double apply_activation(Activation a, double x) {
  switch (a) {
    case Activation::None: return x;
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::ExpNeg: return std::exp(-(x > 0.0 ? x : 0.0));
  }
  return x;
}

double activation_grad(Activation a, double x) {
  switch (a) {
    case Activation::None: return 1.0;
    case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
    case Activation::ExpNeg: return x > 0.0 ? -std::exp(-x) : 0.0;
  }
  return 1.0;
}

int pad_before(int k) { return k - 1 - (k - 1) / 2; }

ConvShape conv_output_shape(int in_rows, int in_cols, int n_kernels, int kw, int kd, PadMode pad) {
  if (pad == PadMode::Same) return {in_rows, in_cols, n_kernels};
  return {in_rows - kw + 1, in_cols - kd + 1, n_kernels};
}

Tensor3 conv_forward(const Tensor3& in, const std::vector<Tensor3>& kernels,
                     const std::vector<double>& biases, PadMode pad, Activation act,
                     Tensor3* pre) {
  if (kernels.empty()) throw ConfigError("conv layer needs at least one kernel");
  const int kw = kernels[0].rows, kd = kernels[0].cols;
  for (const auto& k : kernels)
    if (k.rows != kw || k.cols != kd || k.ch != in.ch)
      throw ConfigError("conv kernel shape does not match the input");
  if (kernels.size() != biases.size()) throw ConfigError("conv kernel/bias count mismatch");
  const ConvShape os =
      conv_output_shape(in.rows, in.cols, static_cast<int>(kernels.size()), kw, kd, pad);
  if (os.rows < 1 || os.cols < 1) throw ConfigError("conv kernel larger than its input");
  const int r0 = pad == PadMode::Same ? -pad_before(kw) : 0;
  const int c0 = pad == PadMode::Same ? -pad_before(kd) : 0;

  Tensor3 out = make_tensor(os.rows, os.cols, os.ch);
  if (pre) *pre = out;
  for (int i = 0; i < os.rows; ++i) {
    for (int j = 0; j < os.cols; ++j) {
      for (int h = 0; h < os.ch; ++h) {
        const Tensor3& k = kernels[static_cast<size_t>(h)];
        double acc = biases[static_cast<size_t>(h)];
        for (int di = 0; di < kw; ++di) {
          const int ri = i + r0 + di;
          if (ri < 0 || ri >= in.rows) continue;
          for (int dj = 0; dj < kd; ++dj) {
            const int cj = j + c0 + dj;
            if (cj < 0 || cj >= in.cols) continue;
            const double* iv = &in.data[(static_cast<size_t>(ri) * in.cols + cj) * in.ch];
            const double* kv = &k.data[(static_cast<size_t>(di) * kd + dj) * k.ch];
            for (int c = 0; c < in.ch; ++c) acc += iv[c] * kv[c];
          }
        }
        if (pre) pre->at(i, j, h) = acc;
        out.at(i, j, h) = apply_activation(act, acc);
      }
    }
  }
  return out;
}

Tensor3 conv_backward(const Tensor3& d_out, const Tensor3& pre, const Tensor3& in,
                      const std::vector<Tensor3>& kernels, PadMode pad, Activation act,
                      std::vector<Tensor3>& d_kernels, std::vector<double>& d_biases) {
  const int kw = kernels[0].rows, kd = kernels[0].cols;
  const int r0 = pad == PadMode::Same ? -pad_before(kw) : 0;
  const int c0 = pad == PadMode::Same ? -pad_before(kd) : 0;
  Tensor3 d_in = make_tensor(in.rows, in.cols, in.ch);
  for (int i = 0; i < d_out.rows; ++i) {
    for (int j = 0; j < d_out.cols; ++j) {
      for (int h = 0; h < d_out.ch; ++h) {
        const double g = d_out.at(i, j, h) * activation_grad(act, pre.at(i, j, h));
        if (g == 0.0) continue;
        d_biases[static_cast<size_t>(h)] += g;
        const Tensor3& k = kernels[static_cast<size_t>(h)];
        Tensor3& dk = d_kernels[static_cast<size_t>(h)];
        for (int di = 0; di < kw; ++di) {
          const int ri = i + r0 + di;
          if (ri < 0 || ri >= in.rows) continue;
          for (int dj = 0; dj < kd; ++dj) {
            const int cj = j + c0 + dj;
            if (cj < 0 || cj >= in.cols) continue;
            const double* iv = &in.data[(static_cast<size_t>(ri) * in.cols + cj) * in.ch];
            double* div = &d_in.data[(static_cast<size_t>(ri) * in.cols + cj) * in.ch];
            const double* kv = &k.data[(static_cast<size_t>(di) * kd + dj) * k.ch];
            double* dkv = &dk.data[(static_cast<size_t>(di) * kd + dj) * k.ch];
            for (int c = 0; c < in.ch; ++c) {
              dkv[c] += g * iv[c];
              div[c] += g * kv[c];
            }
          }
        }
      }
    }
  }
  return d_in;
}

PoolShape pool_output_shape(int in_rows, int in_cols, int pw, int pd) {
  return {(in_rows + pw - 1) / pw, (in_cols + pd - 1) / pd};
}

Tensor3 pool_forward(const Tensor3& in, int pw, int pd, PoolMode mode, std::vector<int>* argmax) {
  if (pw < 1 || pd < 1) throw ConfigError("pool window must be at least 1x1");
  const PoolShape os = pool_output_shape(in.rows, in.cols, pw, pd);
  Tensor3 out = make_tensor(os.rows, os.cols, in.ch);
  if (argmax) argmax->assign(out.data.size(), -1);
  for (int oi = 0; oi < os.rows; ++oi) {
    const int ri = oi * pw, re = std::min(ri + pw, in.rows);
    for (int oj = 0; oj < os.cols; ++oj) {
      const int cj = oj * pd, ce = std::min(cj + pd, in.cols);
      for (int h = 0; h < in.ch; ++h) {
        if (mode == PoolMode::Avg) {
          double acc = 0.0;
          for (int i = ri; i < re; ++i)
            for (int j = cj; j < ce; ++j) acc += in.at(i, j, h);
          out.at(oi, oj, h) = acc / static_cast<double>((re - ri) * (ce - cj));
        } else {
          double best = in.at(ri, cj, h);
          int best_ij = ri * in.cols + cj;
          for (int i = ri; i < re; ++i)
            for (int j = cj; j < ce; ++j)
              if (in.at(i, j, h) > best) {
                best = in.at(i, j, h);
                best_ij = i * in.cols + j;
              }
          out.at(oi, oj, h) = best;
          if (argmax)
            (*argmax)[(static_cast<size_t>(oi) * os.cols + oj) * in.ch + h] = best_ij;
        }
      }
    }
  }
  return out;
}

Tensor3 pool_backward(const Tensor3& d_out, const Tensor3& in, int pw, int pd, PoolMode mode,
                      const std::vector<int>& argmax) {
  Tensor3 d_in = make_tensor(in.rows, in.cols, in.ch);
  for (int oi = 0; oi < d_out.rows; ++oi) {
    const int ri = oi * pw, re = std::min(ri + pw, in.rows);
    for (int oj = 0; oj < d_out.cols; ++oj) {
      const int cj = oj * pd, ce = std::min(cj + pd, in.cols);
      for (int h = 0; h < in.ch; ++h) {
        const double g = d_out.at(oi, oj, h);
        if (mode == PoolMode::Avg) {
          const double share = g / static_cast<double>((re - ri) * (ce - cj));
          for (int i = ri; i < re; ++i)
            for (int j = cj; j < ce; ++j) d_in.at(i, j, h) += share;
        } else {
          const int ij = argmax[(static_cast<size_t>(oi) * d_out.cols + oj) * in.ch + h];
          d_in.at(ij / in.cols, ij % in.cols, h) += g;
        }
      }
    }
  }
  return d_in;
}

std::vector<double> dense_forward(const std::vector<double>& in, const std::vector<double>& w,
                                  const std::vector<double>& b, Activation act,
                                  std::vector<double>* pre) {
  const size_t out_dim = b.size();
  if (w.size() != out_dim * in.size()) throw ConfigError("dense weight shape mismatch");
  std::vector<double> out(out_dim);
  if (pre) pre->resize(out_dim);
  for (size_t o = 0; o < out_dim; ++o) {
    double acc = b[o];
    const double* wv = &w[o * in.size()];
    for (size_t i = 0; i < in.size(); ++i) acc += wv[i] * in[i];
    if (pre) (*pre)[o] = acc;
    out[o] = apply_activation(act, acc);
  }
  return out;
}

std::vector<double> dense_backward(const std::vector<double>& d_out,
                                   const std::vector<double>& pre, const std::vector<double>& in,
                                   const std::vector<double>& w, Activation act,
                                   std::vector<double>& d_w, std::vector<double>& d_b) {
  std::vector<double> d_in(in.size(), 0.0);
  for (size_t o = 0; o < d_out.size(); ++o) {
    const double g = d_out[o] * activation_grad(act, pre[o]);
    if (g == 0.0) continue;
    d_b[o] += g;
    const double* wv = &w[o * in.size()];
    double* dwv = &d_w[o * in.size()];
    for (size_t i = 0; i < in.size(); ++i) {
      dwv[i] += g * in[i];
      d_in[i] += g * wv[i];
    }
  }
  return d_in;
}

}  // namespace qcap
