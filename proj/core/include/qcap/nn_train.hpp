#pragma once

#include <vector>

#include "qcap/nn_model.hpp"
#include "qcap/rng.hpp"

namespace qcap {

struct AdamState {
  std::vector<double> m, v;
  long t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double learning_rate = 1e-3;

  explicit AdamState(size_t n_params, double lr = 1e-3)
      : m(n_params, 0.0), v(n_params, 0.0), learning_rate(lr) {}
};

// Bias-corrected Adam update, in place.
void adam_step(AdamState& st, std::vector<double>& weights, const std::vector<double>& grad);

// Average BCE of the model over a dataset (forward only).
double dataset_loss(const CnnModel& m, const std::vector<Tensor3>& xs,
                    const std::vector<double>& ys, int jobs = 1);

struct TrainOptions {
  bool merge_validate = false;  // final-retrain mode: fit on train + validate
  int fixed_epochs = 0;         // > 0 overrides spec.epochs (used after search)
  int jobs = 1;
};

struct TrainOutcome {
  CnnModel model;     // weights of the best epoch when patience > 0
  int best_epoch = 0; // 1-based epoch with the lowest validation loss
  double best_validate_loss = 0.0;
};

// Mini-batch Adam for spec.epochs epochs (early-stopped after `patience`
// non-improving epochs when spec.patience > 0, restoring the best weights).
// history records, per epoch run, the mean batch training loss and the full
// validation loss. Deterministic in spec.seed; epoch shuffles come from
// per-epoch child rngs, so epoch e's batches do not depend on epoch count.
TrainOutcome train_cnn(const CnnSpec& spec, const std::vector<Tensor3>& train_xs,
                       const std::vector<double>& train_ys, const std::vector<Tensor3>& val_xs,
                       const std::vector<double>& val_ys, const TrainOptions& opts = {});

}  // namespace qcap
