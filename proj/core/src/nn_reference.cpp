#include "qcap/nn_reference.hpp"

#include <cmath>

#include "qcap/circuit.hpp"
#include "qcap/errors.hpp"

namespace qcap {

namespace {

// One filter of the reference conv layer: weights on a single qubit row,
// plus the sign its map carries into the head's sum.
struct RefFilter {
  int row = 0;
  int gate_channel = 0;
  double gate_weight = 0.0;
  int sens_channel = 0;
  double sens_weight = 0.0;
  double bias = 0.0;
  double sign = 1.0;
};

int direction_channel(const DeviceGraph& dev, int from, int to) {
  const auto [r0, c0] = dev.positions[static_cast<size_t>(from)];
  const auto [r1, c1] = dev.positions[static_cast<size_t>(to)];
  if (r1 == r0 && c1 == c0 - 1) return ChannelLayout::kCnotLeft;
  if (r1 == r0 && c1 == c0 + 1) return ChannelLayout::kCnotRight;
  if (c1 == c0 && r1 == r0 - 1) return ChannelLayout::kCnotUp;
  if (c1 == c0 && r1 == r0 + 1) return ChannelLayout::kCnotDown;
  throw DataError("CNOT edge endpoints are not grid neighbors");
}

}  // namespace

CnnModel build_lps_reference_network(const ErrorModel& m, const DeviceGraph& dev, int d_max,
                                     const std::vector<int>& active) {
  if (m.kind != ErrorModelKind::LocalPauliStochastic)
    throw ModelKindMismatch("the reference network expresses base stochastic models only");

  std::vector<RefFilter> filters;
  for (int axis = 1; axis <= 3; ++axis) {
    const int sens_ch = ChannelLayout::kSensX + (axis - 1);
    for (int q = 0; q < dev.n; ++q) {
      // nonzero-angle Z rotations: the channel stores theta, so three
      // filters recover one L at every theta in {-pi/2, pi/2, pi}
      const auto zit = m.rates.one_qubit.find({0, q});
      if (zit != m.rates.one_qubit.end() && zit->second.component(axis) > 0.0) {
        const double L = -std::log1p(-zit->second.component(axis));
        const double slope = 2.0 * L / kPi;
        const double gate = 2.0 * L + 10.0;
        filters.push_back({q, ChannelLayout::kZRot, slope, sens_ch, gate, -gate, +1.0});
        filters.push_back({q, ChannelLayout::kZRot, slope, sens_ch, gate, -(gate + L), -1.0});
        filters.push_back({q, ChannelLayout::kZRot, -slope, sens_ch, gate, -gate, +1.0});
      }
      for (const int cls : {1, 2}) {
        const auto it = m.rates.one_qubit.find({cls, q});
        if (it == m.rates.one_qubit.end() || it->second.component(axis) <= 0.0) continue;
        const double L = -std::log1p(-it->second.component(axis));
        const double gate = L + 10.0;
        const int ch = cls == 1 ? ChannelLayout::kXp : ChannelLayout::kXm;
        filters.push_back({q, ch, L, sens_ch, gate, -gate, +1.0});
      }
    }
    for (const auto& [key, triple] : m.rates.cnot) {
      const auto [control, target, acted] = key;
      if (triple.component(axis) <= 0.0) continue;
      const double L = -std::log1p(-triple.component(axis));
      const double gate = L + 10.0;
      const int sens_row_ch = ChannelLayout::kSensX + (axis - 1);
      if (acted == control) {
        const int ch = direction_channel(dev, control, target);
        filters.push_back({control, ch, L, sens_row_ch, gate, -gate, +1.0});
      } else {
        const int ch = direction_channel(dev, target, control);
        filters.push_back({target, ch, -L, sens_row_ch, gate, -gate, +1.0});
      }
    }
  }
  if (filters.empty())
    filters.push_back({0, ChannelLayout::kZRot, 0.0, ChannelLayout::kSensX, 0.0, -1.0, +1.0});

  CnnSpec spec;
  spec.rows = dev.n;
  spec.cols = d_max;
  spec.channels = ChannelLayout::kChannels;
  const int n_filters = static_cast<int>(filters.size());
  spec.layers.push_back(
      LayerSpec::conv(n_filters, dev.n, 1, Activation::Relu, PadMode::Valid));
  spec.layers.push_back(LayerSpec::flatten());
  spec.layers.push_back(LayerSpec::dense(1, Activation::ExpNeg));
  spec.epochs = 1;
  spec.batch = 1;

  CnnModel model;
  model.spec = spec;
  model.params.assign(parameter_count(spec), 0.0);
  const auto layout = layer_param_layout(spec);

  const size_t per_kernel = static_cast<size_t>(dev.n) * ChannelLayout::kChannels;
  for (int h = 0; h < n_filters; ++h) {
    const RefFilter& f = filters[static_cast<size_t>(h)];
    const size_t base = layout[0].first + static_cast<size_t>(h) * per_kernel;
    model.params[base + static_cast<size_t>(f.row) * ChannelLayout::kChannels +
                 static_cast<size_t>(f.gate_channel)] = f.gate_weight;
    model.params[base + static_cast<size_t>(f.row) * ChannelLayout::kChannels +
                 static_cast<size_t>(f.sens_channel)] = f.sens_weight;
    model.params[layout[0].first + static_cast<size_t>(n_filters) * per_kernel +
                 static_cast<size_t>(h)] = f.bias;
  }

  // head: flatten index (0 * d_max + j) * n_filters + h -> sign of filter h
  const size_t dense_base = layout[2].first;
  for (int j = 0; j < d_max; ++j)
    for (int h = 0; h < n_filters; ++h)
      model.params[dense_base + static_cast<size_t>(j) * static_cast<size_t>(n_filters) +
                   static_cast<size_t>(h)] = filters[static_cast<size_t>(h)].sign;

  double readout_bias = 0.0;
  std::vector<int> read = active;
  if (read.empty())
    for (int q = 0; q < dev.n; ++q) read.push_back(q);
  for (const int q : read) {
    if (q < 0 || q >= static_cast<int>(m.rates.readout.size())) continue;
    readout_bias += -std::log1p(-m.rates.readout[static_cast<size_t>(q)]);
  }
  model.params[dense_base + static_cast<size_t>(d_max) * static_cast<size_t>(n_filters)] =
      readout_bias;
  return model;
}

CnotFilterBank build_sequential_cnot_filters(int channels) {
  if (channels < ChannelLayout::kGateChannels)
    throw ConfigError("filter bank needs the full gate channel block");
  CnotFilterBank bank;
  const int cnot_channels[4] = {ChannelLayout::kCnotLeft, ChannelLayout::kCnotRight,
                                ChannelLayout::kCnotUp, ChannelLayout::kCnotDown};
  for (const double s_prev : {1.0, -1.0}) {
    for (const double s_cur : {1.0, -1.0}) {
      Tensor3 k = make_tensor(1, 2, channels);
      for (const int ch : cnot_channels) {
        k.at(0, 0, ch) = 0.5 * s_prev;  // earlier layer (j - 1)
        k.at(0, 1, ch) = 0.5 * s_cur;   // latter layer (j)
      }
      bank.kernels.push_back(std::move(k));
      bank.biases.push_back(-0.5);
    }
  }
  return bank;
}

std::vector<Tensor3> apply_cnot_filters(const CnotFilterBank& bank, const Tensor3& image) {
  const Tensor3 out =
      conv_forward(image, bank.kernels, bank.biases, PadMode::Same, Activation::Relu);
  std::vector<Tensor3> maps;
  for (int h = 0; h < out.ch; ++h) {
    Tensor3 map = make_tensor(out.rows, out.cols, 1);
    for (int i = 0; i < out.rows; ++i)
      for (int j = 0; j < out.cols; ++j) map.at(i, j, 0) = out.at(i, j, h);
    maps.push_back(std::move(map));
  }
  return maps;
}

}  // namespace qcap
