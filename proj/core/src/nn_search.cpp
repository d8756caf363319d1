#include "qcap/nn_search.hpp"

#include <algorithm>

#include "qcap/errors.hpp"

namespace qcap {

namespace {

template <typename T>
T pick(const std::vector<T>& choices, Rng& rng) {
  if (choices.empty()) throw ConfigError("search space has an empty choice list");
  return choices[rng.below(choices.size())];
}

int pick_range(int lo, int hi, Rng& rng) {
  if (hi < lo) throw ConfigError("search space range is inverted");
  return lo + static_cast<int>(rng.below(static_cast<uint64_t>(hi - lo + 1)));
}

}  // namespace

CnnSpec sample_spec(const SearchSpace& space, int rows, int cols, int channels, Rng& rng) {
  CnnSpec spec;
  spec.rows = rows;
  spec.cols = cols;
  spec.channels = channels;
  const int n_conv = pick(space.conv_layer_choices, rng);
  int depth_left = cols;
  for (int i = 0; i < n_conv; ++i) {
    const int kernels = pick_range(space.min_kernels, space.max_kernels, rng);
    const int kw = pick_range(space.min_kw, std::min(space.max_kw, rows), rng);
    const int kd = pick_range(space.min_kd, space.max_kd, rng);
    spec.layers.push_back(LayerSpec::conv(kernels, kw, kd, Activation::Relu));
    const int pd = pick(space.pool_depth_choices, rng);
    const PoolMode mode = pick(space.pool_mode_choices, rng);
    spec.layers.push_back(mode == PoolMode::Avg ? LayerSpec::pool_avg(1, pd)
                                                : LayerSpec::pool_max(1, pd));
    depth_left = (depth_left + pd - 1) / pd;
  }
  spec.layers.push_back(LayerSpec::flatten());
  spec.layers.push_back(
      LayerSpec::dense(pick_range(space.min_dense_units, space.max_dense_units, rng),
                       Activation::Relu));
  spec.layers.push_back(LayerSpec::dense(1, Activation::Sigmoid));
  spec.batch = pick(space.batch_choices, rng);
  spec.learning_rate = pick(space.learning_rate_choices, rng);
  spec.epochs = space.epochs;
  spec.patience = space.patience;
  spec.seed = rng.next();
  validate_spec(spec);
  return spec;
}

bool spec_in_space(const CnnSpec& spec, const SearchSpace& space, int rows, int cols,
                   int channels) {
  if (spec.rows != rows || spec.cols != cols || spec.channels != channels) return false;
  if (spec.epochs != space.epochs || spec.patience != space.patience) return false;
  if (std::find(space.batch_choices.begin(), space.batch_choices.end(), spec.batch) ==
      space.batch_choices.end())
    return false;
  if (std::find(space.learning_rate_choices.begin(), space.learning_rate_choices.end(),
                spec.learning_rate) == space.learning_rate_choices.end())
    return false;

  int n_conv = 0;
  size_t i = 0;
  while (i + 1 < spec.layers.size() && spec.layers[i].kind == LayerSpec::Kind::Conv) {
    const LayerSpec& c = spec.layers[i];
    if (c.kernels < space.min_kernels || c.kernels > space.max_kernels) return false;
    if (c.kw < space.min_kw || c.kw > std::min(space.max_kw, rows)) return false;
    if (c.kd < space.min_kd || c.kd > space.max_kd) return false;
    if (c.pad != PadMode::Same || c.act != Activation::Relu) return false;
    if (spec.layers[i + 1].kind != LayerSpec::Kind::Pool) return false;
    const LayerSpec& p = spec.layers[i + 1];
    if (p.pw != 1) return false;
    if (std::find(space.pool_depth_choices.begin(), space.pool_depth_choices.end(), p.pd) ==
        space.pool_depth_choices.end())
      return false;
    if (std::find(space.pool_mode_choices.begin(), space.pool_mode_choices.end(), p.pool) ==
        space.pool_mode_choices.end())
      return false;
    ++n_conv;
    i += 2;
  }
  if (std::find(space.conv_layer_choices.begin(), space.conv_layer_choices.end(), n_conv) ==
      space.conv_layer_choices.end())
    return false;
  if (i + 3 != spec.layers.size()) return false;
  if (spec.layers[i].kind != LayerSpec::Kind::Flatten) return false;
  const LayerSpec& hidden = spec.layers[i + 1];
  if (hidden.kind != LayerSpec::Kind::Dense || hidden.act != Activation::Relu ||
      hidden.units < space.min_dense_units || hidden.units > space.max_dense_units)
    return false;
  const LayerSpec& head = spec.layers[i + 2];
  return head.kind == LayerSpec::Kind::Dense && head.units == 1 &&
         head.act == Activation::Sigmoid;
}

SearchResult hyperparameter_search(const SearchSpace& space, const std::vector<Tensor3>& train_xs,
                                   const std::vector<double>& train_ys,
                                   const std::vector<Tensor3>& val_xs,
                                   const std::vector<double>& val_ys, int budget, const Rng& rng,
                                   int jobs) {
  if (budget < 1) throw ConfigError("search budget must be at least 1");
  if (train_xs.empty() || val_xs.empty())
    throw EmptyTrainingSplit("search needs train and validate data");
  const int rows = train_xs[0].rows, cols = train_xs[0].cols, channels = train_xs[0].ch;

  SearchResult result;
  size_t best_count = 0;
  bool have_best = false;
  TrainOptions opts;
  opts.jobs = jobs;
  for (int t = 0; t < budget; ++t) {
    Rng trng = rng.split("draw", static_cast<uint64_t>(t));
    const CnnSpec spec = sample_spec(space, rows, cols, channels, trng);
    const TrainOutcome run = train_cnn(spec, train_xs, train_ys, val_xs, val_ys, opts);
    result.trials.push_back({spec, run.best_validate_loss, run.best_epoch});

    const size_t count = parameter_count(spec);
    const bool better =
        !have_best || run.best_validate_loss < result.best_validate_loss ||
        (run.best_validate_loss == result.best_validate_loss && count < best_count);
    if (better) {
      have_best = true;
      result.best = spec;
      result.best_validate_loss = run.best_validate_loss;
      result.best_epoch = run.best_epoch;
      best_count = count;
    }
  }
  return result;
}

}  // namespace qcap
