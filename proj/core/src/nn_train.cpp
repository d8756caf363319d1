#include "qcap/nn_train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qcap/errors.hpp"
#include "qcap/thread_pool.hpp"

namespace qcap {

void adam_step(AdamState& st, std::vector<double>& weights, const std::vector<double>& grad) {
  if (weights.size() != grad.size() || weights.size() != st.m.size())
    throw ConfigError("adam state does not match the weight vector");
  st.t += 1;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
  for (size_t i = 0; i < weights.size(); ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
    weights[i] -= st.learning_rate * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + st.eps);
  }
}

double dataset_loss(const CnnModel& m, const std::vector<Tensor3>& xs,
                    const std::vector<double>& ys, int jobs) {
  if (xs.empty() || xs.size() != ys.size())
    throw ConfigError("loss needs a non-empty dataset with matching labels");
  std::vector<double> losses(xs.size());
  parallel_for(xs.size(), jobs, [&](size_t i) { losses[i] = bce_loss(ys[i], forward(m, xs[i])); });
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(xs.size());
}

TrainOutcome train_cnn(const CnnSpec& spec, const std::vector<Tensor3>& train_xs,
                       const std::vector<double>& train_ys, const std::vector<Tensor3>& val_xs,
                       const std::vector<double>& val_ys, const TrainOptions& opts) {
  validate_spec(spec);
  if (train_xs.empty() || train_xs.size() != train_ys.size())
    throw EmptyTrainingSplit("training split is empty or mislabeled");
  if (val_xs.size() != val_ys.size()) throw ConfigError("validation labels mismatch");
  if (val_xs.empty() && (spec.patience > 0 && opts.fixed_epochs == 0))
    throw ConfigError("early stopping needs a validation split");

  std::vector<const Tensor3*> xs;
  std::vector<double> ys;
  for (size_t i = 0; i < train_xs.size(); ++i) {
    xs.push_back(&train_xs[i]);
    ys.push_back(train_ys[i]);
  }
  if (opts.merge_validate) {
    for (size_t i = 0; i < val_xs.size(); ++i) {
      xs.push_back(&val_xs[i]);
      ys.push_back(val_ys[i]);
    }
  }

  TrainOutcome out;
  out.model = init_model(spec);
  CnnModel& model = out.model;
  AdamState adam(model.params.size(), spec.learning_rate);
  const Rng root(spec.seed);
  const int epochs = opts.fixed_epochs > 0 ? opts.fixed_epochs : spec.epochs;
  const size_t batch = static_cast<size_t>(spec.batch);

  double best_val = std::numeric_limits<double>::infinity();
  std::vector<double> best_params = model.params;
  int stale = 0;

  std::vector<size_t> order(xs.size());
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng erng = root.split("epoch", static_cast<uint64_t>(epoch));
    erng.shuffle(order);

    double epoch_loss = 0.0;
    size_t n_batches = 0;
    for (size_t start = 0; start < order.size(); start += batch) {
      const size_t end = std::min(start + batch, order.size());
      std::vector<const Tensor3*> bx;
      std::vector<double> by;
      for (size_t k = start; k < end; ++k) {
        bx.push_back(xs[order[k]]);
        by.push_back(ys[order[k]]);
      }
      const BatchGradient bg = loss_and_gradients(model, bx, by, opts.jobs);
      adam_step(adam, model.params, bg.grad);
      epoch_loss += bg.loss;
      ++n_batches;
    }

    EpochStats st;
    st.train_loss = epoch_loss / static_cast<double>(n_batches);
    st.validate_loss =
        val_xs.empty() ? st.train_loss : dataset_loss(model, val_xs, val_ys, opts.jobs);
    model.history.push_back(st);

    if (st.validate_loss < best_val) {
      best_val = st.validate_loss;
      best_params = model.params;
      out.best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    if (spec.patience > 0 && stale >= spec.patience) break;
  }

  if (spec.patience > 0) model.params = best_params;
  out.best_validate_loss = best_val;
  return out;
}

}  // namespace qcap
