#pragma once

#include <vector>

#include "qcap/nn_train.hpp"

namespace qcap {

// Random-search space. Each conv layer is followed by a pooling layer that
// reduces along depth; the network then flattens into one hidden dense
// layer and the single-unit sigmoid head.
struct SearchSpace {
  std::vector<int> conv_layer_choices{1, 2};
  int min_kernels = 8, max_kernels = 14;
  int min_kw = 1, max_kw = 2;
  int min_kd = 2, max_kd = 4;
  std::vector<int> pool_depth_choices{2, 4};
  std::vector<PoolMode> pool_mode_choices{PoolMode::Avg};
  int min_dense_units = 16, max_dense_units = 48;
  std::vector<int> batch_choices{32};
  std::vector<double> learning_rate_choices{1e-3, 3e-3, 1e-2};
  int epochs = 120;
  int patience = 12;
};

CnnSpec sample_spec(const SearchSpace& space, int rows, int cols, int channels, Rng& rng);

// True when spec could have been drawn from the space (used by tests and
// to validate externally supplied specs against a declared space).
bool spec_in_space(const CnnSpec& spec, const SearchSpace& space, int rows, int cols,
                   int channels);

struct SearchTrial {
  CnnSpec spec;
  double validate_loss = 0.0;
  int best_epoch = 0;
};

struct SearchResult {
  CnnSpec best;
  double best_validate_loss = 0.0;
  int best_epoch = 0;
  std::vector<SearchTrial> trials;
};

// Trains `budget` sampled specs on the train split and keeps the one with
// the lowest validation loss; ties break toward fewer parameters, then the
// earlier draw. Deterministic in `rng`.
SearchResult hyperparameter_search(const SearchSpace& space, const std::vector<Tensor3>& train_xs,
                                   const std::vector<double>& train_ys,
                                   const std::vector<Tensor3>& val_xs,
                                   const std::vector<double>& val_ys, int budget, const Rng& rng,
                                   int jobs = 1);

}  // namespace qcap
