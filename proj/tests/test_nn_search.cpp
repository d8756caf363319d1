#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "qcap/errors.hpp"
#include "qcap/nn_search.hpp"
#include "qcap/rng.hpp"

using namespace qcap;

namespace {

SearchSpace quick_space() {
  SearchSpace space;
  space.conv_layer_choices = {1};
  space.min_kernels = 3;
  space.max_kernels = 5;
  space.min_kw = 1;
  space.max_kw = 2;
  space.min_kd = 2;
  space.max_kd = 3;
  space.pool_depth_choices = {2};
  space.min_dense_units = 4;
  space.max_dense_units = 8;
  space.batch_choices = {8};
  space.learning_rate_choices = {3e-3};
  space.epochs = 4;
  space.patience = 0;
  return space;
}

void make_data(int rows, int cols, int ch, size_t n, uint64_t seed, std::vector<Tensor3>& xs,
               std::vector<double>& ys) {
  Rng rng(seed);
  for (size_t i = 0; i < n; ++i) {
    Tensor3 t = make_tensor(rows, cols, ch);
    double mean = 0.0;
    for (auto& v : t.data) {
      v = rng.uniform(-1.0, 1.0);
      mean += v;
    }
    mean /= static_cast<double>(t.data.size());
    xs.push_back(t);
    ys.push_back(1.0 / (1.0 + std::exp(-4.0 * mean)));
  }
}

}  // namespace

TEST_CASE("sampled specs stay inside the space") {
  const SearchSpace space;  // defaults
  Rng rng(3);
  std::set<int> kernel_counts, dense_units;
  for (int i = 0; i < 100; ++i) {
    const CnnSpec spec = sample_spec(space, 5, 68, 10, rng);
    CHECK_NOTHROW(validate_spec(spec));
    CHECK(spec_in_space(spec, space, 5, 68, 10));
    CHECK(spec.rows == 5);
    CHECK(spec.cols == 68);
    CHECK(spec.channels == 10);
    CHECK(spec.epochs == space.epochs);
    CHECK(spec.patience == space.patience);
    CHECK(spec.batch == 32);

    int convs = 0, pools = 0, denses = 0;
    for (const auto& l : spec.layers) {
      switch (l.kind) {
        case LayerSpec::Kind::Conv:
          ++convs;
          CHECK(l.kernels >= space.min_kernels);
          CHECK(l.kernels <= space.max_kernels);
          CHECK(l.kw >= space.min_kw);
          CHECK(l.kw <= space.max_kw);
          CHECK(l.kd >= space.min_kd);
          CHECK(l.kd <= space.max_kd);
          kernel_counts.insert(l.kernels);
          break;
        case LayerSpec::Kind::Pool:
          ++pools;
          CHECK(l.pw == 1);  // pooling reduces along depth only
          CHECK((l.pd == 2 || l.pd == 4));
          break;
        case LayerSpec::Kind::Dense:
          ++denses;
          break;
        case LayerSpec::Kind::Flatten:
          break;
      }
    }
    CHECK(convs >= 1);
    CHECK(convs <= 2);
    CHECK(pools == convs);
    CHECK(denses == 2);  // hidden + head
    const auto& hidden = spec.layers[spec.layers.size() - 2];
    CHECK(hidden.units >= space.min_dense_units);
    CHECK(hidden.units <= space.max_dense_units);
    dense_units.insert(hidden.units);
  }
  // The draw actually explores the ranges.
  CHECK(kernel_counts.size() >= 4);
  CHECK(dense_units.size() >= 10);
}

TEST_CASE("sampling is deterministic") {
  const SearchSpace space;
  Rng a(7), b(7), c(8);
  const CnnSpec sa = sample_spec(space, 5, 36, 10, a);
  const CnnSpec sb = sample_spec(space, 5, 36, 10, b);
  const CnnSpec sc = sample_spec(space, 5, 36, 10, c);
  CHECK(sa == sb);
  CHECK_FALSE(sa == sc);
}

TEST_CASE("spec_in_space rejects out-of-space specs") {
  const SearchSpace space = quick_space();
  Rng rng(9);
  const CnnSpec good = sample_spec(space, 3, 8, 4, rng);
  CHECK(spec_in_space(good, space, 3, 8, 4));

  CnnSpec wrong_shape = good;
  wrong_shape.cols = 9;
  CHECK_FALSE(spec_in_space(wrong_shape, space, 3, 8, 4));

  CnnSpec big_kernels = good;
  for (auto& l : big_kernels.layers)
    if (l.kind == LayerSpec::Kind::Conv) l.kernels = 99;
  CHECK_FALSE(spec_in_space(big_kernels, space, 3, 8, 4));

  CnnSpec wrong_lr = good;
  wrong_lr.learning_rate = 0.5;
  CHECK_FALSE(spec_in_space(wrong_lr, space, 3, 8, 4));

  CnnSpec wrong_batch = good;
  wrong_batch.batch = 7;
  CHECK_FALSE(spec_in_space(wrong_batch, space, 3, 8, 4));
}

TEST_CASE("search keeps the lowest validation loss") {
  const SearchSpace space = quick_space();
  std::vector<Tensor3> xs, vxs;
  std::vector<double> ys, vys;
  make_data(3, 8, 4, 32, 50, xs, ys);
  make_data(3, 8, 4, 12, 51, vxs, vys);

  const SearchResult res = hyperparameter_search(space, xs, ys, vxs, vys, 4, Rng(11));
  REQUIRE(res.trials.size() == 4);
  double min_loss = 1e300;
  for (const auto& t : res.trials) min_loss = std::min(min_loss, t.validate_loss);
  CHECK(res.best_validate_loss == doctest::Approx(min_loss).epsilon(1e-15));
  bool found = false;
  for (const auto& t : res.trials)
    if (t.spec == res.best && t.validate_loss == res.best_validate_loss) found = true;
  CHECK(found);
  CHECK(spec_in_space(res.best, space, 3, 8, 4));

  // Deterministic re-run.
  const SearchResult again = hyperparameter_search(space, xs, ys, vxs, vys, 4, Rng(11));
  CHECK(again.best == res.best);
  CHECK(again.best_validate_loss == res.best_validate_loss);
  for (size_t i = 0; i < 4; ++i) CHECK(again.trials[i].validate_loss == res.trials[i].validate_loss);
}

TEST_CASE("ties break toward fewer parameters then earlier draws") {
  // A budget of several draws over a space whose losses often tie exactly is
  // hard to construct; instead check the documented rule on the trial list
  // the search actually produced.
  const SearchSpace space = quick_space();
  std::vector<Tensor3> xs, vxs;
  std::vector<double> ys, vys;
  make_data(3, 8, 4, 16, 60, xs, ys);
  make_data(3, 8, 4, 8, 61, vxs, vys);
  const SearchResult res = hyperparameter_search(space, xs, ys, vxs, vys, 6, Rng(13));
  for (const auto& t : res.trials) {
    if (t.validate_loss < res.best_validate_loss) continue;
    if (t.validate_loss > res.best_validate_loss) continue;
    // Any exact tie must not have strictly fewer parameters than the winner.
    CHECK(parameter_count(t.spec) >= parameter_count(res.best));
  }
}

TEST_CASE("budget must be positive") {
  const SearchSpace space = quick_space();
  std::vector<Tensor3> xs, vxs;
  std::vector<double> ys, vys;
  make_data(3, 8, 4, 8, 70, xs, ys);
  make_data(3, 8, 4, 4, 71, vxs, vys);
  CHECK_THROWS_AS(hyperparameter_search(space, xs, ys, vxs, vys, 0, Rng(1)), ConfigError);
}
