#include <benchmark/benchmark.h>

#include "qcap/capability.hpp"
#include "qcap/encode.hpp"
#include "qcap/erm.hpp"
#include "qcap/mirror.hpp"
#include "qcap/nn_model.hpp"
#include "qcap/noise.hpp"
#include "qcap/statevector.hpp"
#include "qcap/tableau.hpp"

namespace {

using namespace qcap;

Circuit make_circuit(int depth) {
  const DeviceGraph dev = t5_device();
  Rng rng(7);
  SamplerConfig cfg;
  cfg.qubits = {0, 1, 2, 3, 4};
  cfg.depth = depth;
  return sample_randomized_mirror_circuit(dev, cfg, rng);
}

ErrorModel make_model() {
  const DeviceGraph dev = t5_device();
  Rng rng(11);
  return sample_biased_lps(dev, rng);
}

void bm_tableau_propagation(benchmark::State& state) {
  const Circuit c = make_circuit(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    StabilizerTableau t(c.width());
    for (int l = 0; l < c.depth(); ++l) t.apply_layer(c, l);
    benchmark::DoNotOptimize(t.stabilizers().data());
  }
}
BENCHMARK(bm_tableau_propagation)->Arg(16)->Arg(64);

void bm_sensitivity_channels(benchmark::State& state) {
  const Circuit c = make_circuit(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto sens = sensitivity_channels(c);
    benchmark::DoNotOptimize(sens.data());
  }
}
BENCHMARK(bm_sensitivity_channels)->Arg(16)->Arg(64);

void bm_analytic_success(benchmark::State& state) {
  const Circuit c = make_circuit(64);
  const ErrorModel m = make_model();
  for (auto _ : state) benchmark::DoNotOptimize(analytic_success_probability(c, m));
}
BENCHMARK(bm_analytic_success);

void bm_monte_carlo(benchmark::State& state) {
  const Circuit c = make_circuit(16);
  const ErrorModel m = make_model();
  const Rng rng(3);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        monte_carlo_success_probability(c, m, state.range(0), rng).s);
}
BENCHMARK(bm_monte_carlo)->Arg(100)->Arg(1000);

void bm_statevector_layers(benchmark::State& state) {
  const Circuit c = make_circuit(16);
  for (auto _ : state) {
    Statevector psi(c.width());
    for (int l = 0; l < c.depth(); ++l) psi.apply_layer(c, l);
    benchmark::DoNotOptimize(psi.norm());
  }
}
BENCHMARK(bm_statevector_layers);

void bm_encode(benchmark::State& state) {
  const DeviceGraph dev = t5_device();
  const Circuit c = make_circuit(64);
  for (auto _ : state) {
    auto t = encode(c, dev, 68);
    benchmark::DoNotOptimize(t.data.data());
  }
}
BENCHMARK(bm_encode);

void bm_erm_predict(benchmark::State& state) {
  const DeviceGraph dev = t5_device();
  const Circuit c = make_circuit(64);
  const ErmParams p = init_erm_for_device(dev, 0.001);
  for (auto _ : state) benchmark::DoNotOptimize(erm_predict(p, c));
}
BENCHMARK(bm_erm_predict);

CnnModel make_cnn(int cols) {
  CnnSpec spec;
  spec.rows = 5;
  spec.cols = cols;
  spec.channels = ChannelLayout::kChannels;
  spec.layers = {LayerSpec::conv(12, 1, 4), LayerSpec::pool_avg(1, 4), LayerSpec::flatten(),
                 LayerSpec::dense(32, Activation::Relu), LayerSpec::dense(1, Activation::Sigmoid)};
  spec.seed = 5;
  return init_model(spec);
}

void bm_cnn_forward(benchmark::State& state) {
  const DeviceGraph dev = t5_device();
  const Circuit c = make_circuit(64);
  const CnnModel m = make_cnn(68);
  const Tensor3 x = encode(c, dev, 68);
  for (auto _ : state) benchmark::DoNotOptimize(forward(m, x));
}
BENCHMARK(bm_cnn_forward);

void bm_cnn_batch_gradient(benchmark::State& state) {
  const DeviceGraph dev = t5_device();
  const CnnModel m = make_cnn(68);
  std::vector<Tensor3> xs;
  std::vector<const Tensor3*> ptrs;
  std::vector<double> ys;
  Rng rng(19);
  for (int i = 0; i < 32; ++i) {
    SamplerConfig cfg;
    cfg.qubits = {0, 1, 2, 3, 4};
    cfg.depth = 16;
    xs.push_back(encode(sample_randomized_mirror_circuit(dev, cfg, rng), dev, 68));
    ys.push_back(0.5 + 0.01 * i);
  }
  for (const auto& x : xs) ptrs.push_back(&x);
  for (auto _ : state) {
    auto g = loss_and_gradients(m, ptrs, ys);
    benchmark::DoNotOptimize(g.grad.data());
  }
}
BENCHMARK(bm_cnn_batch_gradient);

}  // namespace

BENCHMARK_MAIN();
