#include "qcap/nn_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qcap/errors.hpp"
#include "qcap/hashing.hpp"
#include "qcap/rng.hpp"
#include "qcap/thread_pool.hpp"

namespace qcap {

LayerSpec LayerSpec::conv(int kernels, int kw, int kd, Activation act, PadMode pad) {
  LayerSpec l;
  l.kind = Kind::Conv;
  l.kernels = kernels;
  l.kw = kw;
  l.kd = kd;
  l.act = act;
  l.pad = pad;
  return l;
}

LayerSpec LayerSpec::pool_avg(int pw, int pd) {
  LayerSpec l;
  l.kind = Kind::Pool;
  l.pw = pw;
  l.pd = pd;
  l.pool = PoolMode::Avg;
  return l;
}

LayerSpec LayerSpec::pool_max(int pw, int pd) {
  LayerSpec l = pool_avg(pw, pd);
  l.pool = PoolMode::Max;
  return l;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec l;
  l.kind = Kind::Flatten;
  return l;
}

LayerSpec LayerSpec::dense(int units, Activation act) {
  LayerSpec l;
  l.kind = Kind::Dense;
  l.units = units;
  l.act = act;
  return l;
}

bool LayerSpec::operator==(const LayerSpec& o) const {
  return kind == o.kind && kernels == o.kernels && kw == o.kw && kd == o.kd && pad == o.pad &&
         pw == o.pw && pd == o.pd && pool == o.pool && units == o.units && act == o.act;
}

bool CnnSpec::operator==(const CnnSpec& o) const {
  return rows == o.rows && cols == o.cols && channels == o.channels && layers == o.layers &&
         epochs == o.epochs && batch == o.batch && patience == o.patience &&
         learning_rate == o.learning_rate && seed == o.seed;
}

void validate_spec(const CnnSpec& spec) {
  if (spec.rows < 1 || spec.cols < 1 || spec.channels < 1)
    throw ConfigError("network input shape must be positive");
  if (spec.layers.empty()) throw ConfigError("network needs layers");
  if (spec.epochs < 1 || spec.batch < 1 || spec.patience < 0)
    throw ConfigError("epochs/batch/patience out of range");
  if (!(spec.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");

  size_t flatten_at = spec.layers.size();
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    switch (l.kind) {
      case LayerSpec::Kind::Conv:
        if (i > flatten_at) throw ConfigError("conv layer after flatten");
        if (l.kernels < 1 || l.kw < 1 || l.kd < 1) throw ConfigError("conv layer shape invalid");
        break;
      case LayerSpec::Kind::Pool:
        if (i > flatten_at) throw ConfigError("pool layer after flatten");
        if (l.pw < 1 || l.pd < 1) throw ConfigError("pool window invalid");
        break;
      case LayerSpec::Kind::Flatten:
        if (flatten_at != spec.layers.size()) throw ConfigError("network has two flatten layers");
        flatten_at = i;
        break;
      case LayerSpec::Kind::Dense:
        if (flatten_at == spec.layers.size()) throw ConfigError("dense layer before flatten");
        if (l.units < 1) throw ConfigError("dense layer needs units");
        break;
    }
  }
  if (flatten_at == spec.layers.size()) throw ConfigError("network needs a flatten layer");
  const LayerSpec& last = spec.layers.back();
  if (last.kind != LayerSpec::Kind::Dense || last.units != 1 ||
      (last.act != Activation::Sigmoid && last.act != Activation::ExpNeg))
    throw ConfigError("network must end in a single-unit dense layer with a probability head");
  infer_shapes(spec);
}

std::vector<ConvShape> infer_shapes(const CnnSpec& spec) {
  std::vector<ConvShape> shapes;
  ConvShape cur{spec.rows, spec.cols, spec.channels};
  for (const LayerSpec& l : spec.layers) {
    switch (l.kind) {
      case LayerSpec::Kind::Conv:
        cur = conv_output_shape(cur.rows, cur.cols, l.kernels, l.kw, l.kd, l.pad);
        if (cur.rows < 1 || cur.cols < 1)
          throw ConfigError("conv kernel does not fit its input");
        break;
      case LayerSpec::Kind::Pool: {
        const PoolShape ps = pool_output_shape(cur.rows, cur.cols, l.pw, l.pd);
        cur = {ps.rows, ps.cols, cur.ch};
        break;
      }
      case LayerSpec::Kind::Flatten: cur = {cur.rows * cur.cols * cur.ch, 1, 1}; break;
      case LayerSpec::Kind::Dense: cur = {l.units, 1, 1}; break;
    }
    shapes.push_back(cur);
  }
  return shapes;
}

std::vector<std::pair<size_t, size_t>> layer_param_layout(const CnnSpec& spec) {
  std::vector<std::pair<size_t, size_t>> layout;
  ConvShape cur{spec.rows, spec.cols, spec.channels};
  size_t offset = 0;
  for (const LayerSpec& l : spec.layers) {
    size_t count = 0;
    switch (l.kind) {
      case LayerSpec::Kind::Conv:
        count = static_cast<size_t>(l.kernels) *
                    (static_cast<size_t>(l.kw) * static_cast<size_t>(l.kd) *
                     static_cast<size_t>(cur.ch)) +
                static_cast<size_t>(l.kernels);
        cur = conv_output_shape(cur.rows, cur.cols, l.kernels, l.kw, l.kd, l.pad);
        break;
      case LayerSpec::Kind::Pool: {
        const PoolShape ps = pool_output_shape(cur.rows, cur.cols, l.pw, l.pd);
        cur = {ps.rows, ps.cols, cur.ch};
        break;
      }
      case LayerSpec::Kind::Flatten: cur = {cur.rows * cur.cols * cur.ch, 1, 1}; break;
      case LayerSpec::Kind::Dense:
        count = static_cast<size_t>(l.units) * static_cast<size_t>(cur.rows) +
                static_cast<size_t>(l.units);
        cur = {l.units, 1, 1};
        break;
    }
    layout.push_back({offset, count});
    offset += count;
  }
  return layout;
}

size_t parameter_count(const CnnSpec& spec) {
  const auto layout = layer_param_layout(spec);
  return layout.empty() ? 0 : layout.back().first + layout.back().second;
}

namespace {

// Kernel tensors and bias span of a conv layer, unpacked from the flat
// parameter vector.
struct ConvWeights {
  std::vector<Tensor3> kernels;
  std::vector<double> biases;
};

ConvWeights unpack_conv(const LayerSpec& l, int in_ch, const std::vector<double>& params,
                        size_t offset) {
  ConvWeights w;
  const size_t per_kernel =
      static_cast<size_t>(l.kw) * static_cast<size_t>(l.kd) * static_cast<size_t>(in_ch);
  for (int h = 0; h < l.kernels; ++h) {
    Tensor3 k = make_tensor(l.kw, l.kd, in_ch);
    std::copy_n(params.begin() + static_cast<long>(offset + h * per_kernel), per_kernel,
                k.data.begin());
    w.kernels.push_back(std::move(k));
  }
  const size_t bias_base = offset + static_cast<size_t>(l.kernels) * per_kernel;
  w.biases.assign(params.begin() + static_cast<long>(bias_base),
                  params.begin() + static_cast<long>(bias_base + l.kernels));
  return w;
}

struct LayerCache {
  Tensor3 t_in, t_pre;              // conv
  std::vector<int> argmax;          // max pool
  std::vector<double> v_in, v_pre;  // dense
};

double forward_impl(const CnnModel& m, const Tensor3& in, std::vector<LayerCache>* caches) {
  if (in.rows != m.spec.rows || in.cols != m.spec.cols || in.ch != m.spec.channels)
    throw ConfigError("input tensor shape does not match the network");
  const auto layout = layer_param_layout(m.spec);
  Tensor3 t = in;
  std::vector<double> v;
  bool flat = false;
  int ch = m.spec.channels;
  for (size_t li = 0; li < m.spec.layers.size(); ++li) {
    const LayerSpec& l = m.spec.layers[li];
    LayerCache* cache = caches ? &(*caches)[li] : nullptr;
    switch (l.kind) {
      case LayerSpec::Kind::Conv: {
        const ConvWeights w = unpack_conv(l, ch, m.params, layout[li].first);
        Tensor3 pre;
        if (cache) cache->t_in = t;
        t = conv_forward(t, w.kernels, w.biases, l.pad, l.act, cache ? &pre : nullptr);
        if (cache) cache->t_pre = std::move(pre);
        ch = l.kernels;
        break;
      }
      case LayerSpec::Kind::Pool: {
        if (cache) cache->t_in = t;
        std::vector<int> argmax;
        t = pool_forward(t, l.pw, l.pd, l.pool,
                         l.pool == PoolMode::Max && cache ? &argmax : nullptr);
        if (cache) cache->argmax = std::move(argmax);
        break;
      }
      case LayerSpec::Kind::Flatten:
        v = t.data;
        flat = true;
        break;
      case LayerSpec::Kind::Dense: {
        if (!flat) throw ConfigError("dense layer before flatten");
        const size_t in_dim = v.size();
        const size_t w_count = static_cast<size_t>(l.units) * in_dim;
        std::vector<double> w(m.params.begin() + static_cast<long>(layout[li].first),
                              m.params.begin() + static_cast<long>(layout[li].first + w_count));
        std::vector<double> b(
            m.params.begin() + static_cast<long>(layout[li].first + w_count),
            m.params.begin() + static_cast<long>(layout[li].first + w_count + l.units));
        if (cache) cache->v_in = v;
        std::vector<double> pre;
        v = dense_forward(v, w, b, l.act, cache ? &pre : nullptr);
        if (cache) cache->v_pre = std::move(pre);
        break;
      }
    }
  }
  return v.at(0);
}

// Backprop for one sample; adds parameter gradients into grad. d_final is
// dL/d(pre-activation) of the last layer when skip_last_act is set (the
// analytic sigmoid-BCE shortcut), else dL/d(output).
void backward_impl(const CnnModel& m, const std::vector<LayerCache>& caches, double d_final,
                   bool skip_last_act, std::vector<double>& grad) {
  const auto layout = layer_param_layout(m.spec);
  std::vector<double> dv{d_final};
  Tensor3 dt;
  bool in_tensor = false;
  for (size_t li = m.spec.layers.size(); li-- > 0;) {
    const LayerSpec& l = m.spec.layers[li];
    const LayerCache& cache = caches[li];
    switch (l.kind) {
      case LayerSpec::Kind::Dense: {
        const size_t in_dim = cache.v_in.size();
        const size_t w_count = static_cast<size_t>(l.units) * in_dim;
        std::vector<double> w(m.params.begin() + static_cast<long>(layout[li].first),
                              m.params.begin() + static_cast<long>(layout[li].first + w_count));
        std::vector<double> dw(w_count, 0.0), db(static_cast<size_t>(l.units), 0.0);
        const bool last = li + 1 == m.spec.layers.size();
        const Activation act = last && skip_last_act ? Activation::None : l.act;
        dv = dense_backward(dv, cache.v_pre, cache.v_in, w, act, dw, db);
        double* g = &grad[layout[li].first];
        for (size_t i = 0; i < w_count; ++i) g[i] += dw[i];
        for (size_t i = 0; i < db.size(); ++i) g[w_count + i] += db[i];
        break;
      }
      case LayerSpec::Kind::Flatten: {
        // recompute the pre-flatten tensor shape from the spec
        ConvShape cur{m.spec.rows, m.spec.cols, m.spec.channels};
        for (size_t lj = 0; lj < li; ++lj) {
          const LayerSpec& lsj = m.spec.layers[lj];
          if (lsj.kind == LayerSpec::Kind::Conv)
            cur = conv_output_shape(cur.rows, cur.cols, lsj.kernels, lsj.kw, lsj.kd, lsj.pad);
          else if (lsj.kind == LayerSpec::Kind::Pool) {
            const PoolShape ps = pool_output_shape(cur.rows, cur.cols, lsj.pw, lsj.pd);
            cur = {ps.rows, ps.cols, cur.ch};
          }
        }
        dt = make_tensor(cur.rows, cur.cols, cur.ch);
        dt.data = dv;
        in_tensor = true;
        break;
      }
      case LayerSpec::Kind::Pool:
        if (!in_tensor) throw ConfigError("backprop reached a pool layer without a tensor");
        dt = pool_backward(dt, cache.t_in, l.pw, l.pd, l.pool, cache.argmax);
        break;
      case LayerSpec::Kind::Conv: {
        if (!in_tensor) throw ConfigError("backprop reached a conv layer without a tensor");
        const ConvWeights w = unpack_conv(l, cache.t_in.ch, m.params, layout[li].first);
        std::vector<Tensor3> dk;
        for (int h = 0; h < l.kernels; ++h) dk.push_back(make_tensor(l.kw, l.kd, cache.t_in.ch));
        std::vector<double> db(static_cast<size_t>(l.kernels), 0.0);
        dt = conv_backward(dt, cache.t_pre, cache.t_in, w.kernels, l.pad, l.act, dk, db);
        const size_t per_kernel = dk[0].data.size();
        double* g = &grad[layout[li].first];
        for (int h = 0; h < l.kernels; ++h)
          for (size_t i = 0; i < per_kernel; ++i)
            g[static_cast<size_t>(h) * per_kernel + i] += dk[static_cast<size_t>(h)].data[i];
        for (int h = 0; h < l.kernels; ++h)
          g[static_cast<size_t>(l.kernels) * per_kernel + static_cast<size_t>(h)] +=
              db[static_cast<size_t>(h)];
        break;
      }
    }
  }
}

}  // namespace

CnnModel init_model(const CnnSpec& spec) {
  validate_spec(spec);
  CnnModel m;
  m.spec = spec;
  m.params.assign(parameter_count(spec), 0.0);
  Rng rng = Rng(spec.seed).split("init");
  const auto layout = layer_param_layout(spec);
  int ch = spec.channels;
  ConvShape cur{spec.rows, spec.cols, spec.channels};
  for (size_t li = 0; li < spec.layers.size(); ++li) {
    const LayerSpec& l = spec.layers[li];
    if (l.kind == LayerSpec::Kind::Conv) {
      const size_t fan_in =
          static_cast<size_t>(l.kw) * static_cast<size_t>(l.kd) * static_cast<size_t>(ch);
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      const size_t weights = static_cast<size_t>(l.kernels) * fan_in;
      for (size_t i = 0; i < weights; ++i)
        m.params[layout[li].first + i] = rng.uniform(-bound, bound);
      cur = conv_output_shape(cur.rows, cur.cols, l.kernels, l.kw, l.kd, l.pad);
      ch = l.kernels;
    } else if (l.kind == LayerSpec::Kind::Pool) {
      const PoolShape ps = pool_output_shape(cur.rows, cur.cols, l.pw, l.pd);
      cur = {ps.rows, ps.cols, cur.ch};
    } else if (l.kind == LayerSpec::Kind::Flatten) {
      cur = {cur.rows * cur.cols * cur.ch, 1, 1};
    } else if (l.kind == LayerSpec::Kind::Dense) {
      const size_t fan_in = static_cast<size_t>(cur.rows);
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      const size_t weights = static_cast<size_t>(l.units) * fan_in;
      for (size_t i = 0; i < weights; ++i)
        m.params[layout[li].first + i] = rng.uniform(-bound, bound);
      cur = {l.units, 1, 1};
    }
  }
  return m;
}

double forward(const CnnModel& m, const Tensor3& in) { return forward_impl(m, in, nullptr); }

double bce_loss(double label, double prediction) {
  const double p = std::clamp(prediction, 1e-7, 1.0 - 1e-7);
  return -(label * std::log(p) + (1.0 - label) * std::log1p(-p));
}

BatchGradient loss_and_gradients(const CnnModel& m, const std::vector<const Tensor3*>& xs,
                                 const std::vector<double>& ys, int jobs) {
  if (xs.empty() || xs.size() != ys.size())
    throw ConfigError("batch must be non-empty with matching labels");
  for (const double y : ys)
    if (!(y >= 0.0 && y <= 1.0)) throw DataError("label outside [0, 1]");
  const bool sigmoid_head = m.spec.layers.back().act == Activation::Sigmoid;

  const size_t np = m.params.size();
  std::vector<double> losses(xs.size(), 0.0);
  std::vector<std::vector<double>> grads(xs.size());
  parallel_for(xs.size(), jobs, [&](size_t i) {
    std::vector<LayerCache> caches(m.spec.layers.size());
    const double p = forward_impl(m, *xs[i], &caches);
    losses[i] = bce_loss(ys[i], p);
    grads[i].assign(np, 0.0);
    if (sigmoid_head) {
      backward_impl(m, caches, p - ys[i], true, grads[i]);
    } else {
      const double pc = std::clamp(p, 1e-7, 1.0 - 1e-7);
      const double dldp = -(ys[i] / pc) + (1.0 - ys[i]) / (1.0 - pc);
      backward_impl(m, caches, dldp, false, grads[i]);
    }
  });

  BatchGradient out;
  out.grad.assign(np, 0.0);
  const double inv_n = 1.0 / static_cast<double>(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    out.loss += losses[i] * inv_n;
    for (size_t k = 0; k < np; ++k) out.grad[k] += grads[i][k] * inv_n;
  }
  if (!std::isfinite(out.loss)) throw NumericalError("batch loss is not finite");
  return out;
}

namespace {

const char* act_name(Activation a) {
  switch (a) {
    case Activation::None: return "none";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::ExpNeg: return "expneg";
  }
  return "none";
}

Activation act_from_name(const std::string& s) {
  if (s == "none") return Activation::None;
  if (s == "relu") return Activation::Relu;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "expneg") return Activation::ExpNeg;
  throw SchemaError("unknown activation: " + s);
}

}  // namespace

std::string spec_to_json(const CnnSpec& spec) {
  nlohmann::ordered_json j;
  j["rows"] = spec.rows;
  j["cols"] = spec.cols;
  j["channels"] = spec.channels;
  j["epochs"] = spec.epochs;
  j["batch"] = spec.batch;
  j["patience"] = spec.patience;
  j["learning_rate"] = spec.learning_rate;
  j["seed"] = spec.seed;
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const LayerSpec& l : spec.layers) {
    nlohmann::ordered_json lj;
    switch (l.kind) {
      case LayerSpec::Kind::Conv:
        lj["kind"] = "conv";
        lj["kernels"] = l.kernels;
        lj["kw"] = l.kw;
        lj["kd"] = l.kd;
        lj["pad"] = l.pad == PadMode::Same ? "same" : "valid";
        lj["act"] = act_name(l.act);
        break;
      case LayerSpec::Kind::Pool:
        lj["kind"] = "pool";
        lj["pw"] = l.pw;
        lj["pd"] = l.pd;
        lj["mode"] = l.pool == PoolMode::Avg ? "avg" : "max";
        break;
      case LayerSpec::Kind::Flatten: lj["kind"] = "flatten"; break;
      case LayerSpec::Kind::Dense:
        lj["kind"] = "dense";
        lj["units"] = l.units;
        lj["act"] = act_name(l.act);
        break;
    }
    layers.push_back(lj);
  }
  j["layers"] = layers;
  return j.dump(2);
}

CnnSpec spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("network spec is not valid JSON: ") + e.what());
  }
  try {
    CnnSpec spec;
    spec.rows = j.at("rows").get<int>();
    spec.cols = j.at("cols").get<int>();
    spec.channels = j.at("channels").get<int>();
    spec.epochs = j.at("epochs").get<int>();
    spec.batch = j.at("batch").get<int>();
    spec.patience = j.at("patience").get<int>();
    spec.learning_rate = j.at("learning_rate").get<double>();
    spec.seed = j.at("seed").get<uint64_t>();
    for (const auto& lj : j.at("layers")) {
      const std::string kind = lj.at("kind").get<std::string>();
      if (kind == "conv") {
        LayerSpec l = LayerSpec::conv(lj.at("kernels").get<int>(), lj.at("kw").get<int>(),
                                      lj.at("kd").get<int>(),
                                      act_from_name(lj.at("act").get<std::string>()));
        const std::string pad = lj.at("pad").get<std::string>();
        if (pad != "same" && pad != "valid") throw SchemaError("unknown pad mode: " + pad);
        l.pad = pad == "same" ? PadMode::Same : PadMode::Valid;
        spec.layers.push_back(l);
      } else if (kind == "pool") {
        const std::string mode = lj.at("mode").get<std::string>();
        if (mode != "avg" && mode != "max") throw SchemaError("unknown pool mode: " + mode);
        spec.layers.push_back(mode == "avg"
                                  ? LayerSpec::pool_avg(lj.at("pw").get<int>(), lj.at("pd").get<int>())
                                  : LayerSpec::pool_max(lj.at("pw").get<int>(), lj.at("pd").get<int>()));
      } else if (kind == "flatten") {
        spec.layers.push_back(LayerSpec::flatten());
      } else if (kind == "dense") {
        spec.layers.push_back(LayerSpec::dense(lj.at("units").get<int>(),
                                               act_from_name(lj.at("act").get<std::string>())));
      } else {
        throw SchemaError("unknown layer kind: " + kind);
      }
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("network spec schema: ") + e.what());
  }
}

namespace {

constexpr char kModelMagic[8] = {'Q', 'C', 'A', 'P', 'M', 'O', 'D', 'L'};
constexpr uint32_t kModelVersion = 1;

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw SchemaError("model file truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

uint64_t block_checksum(const double* p, size_t count) {
  std::string bytes(reinterpret_cast<const char*>(p), count * sizeof(double));
  return fnv1a(bytes);
}

}  // namespace

void save_cnn(const CnnModel& m, const std::string& path) {
  std::string out;
  out.append(kModelMagic, sizeof(kModelMagic));
  put<uint32_t>(out, kModelVersion);
  const std::string spec_json = spec_to_json(m.spec);
  put<uint64_t>(out, spec_json.size());
  out.append(spec_json);

  const auto layout = layer_param_layout(m.spec);
  uint32_t blocks = 0;
  for (const auto& [off, count] : layout)
    if (count > 0) ++blocks;
  put<uint32_t>(out, blocks);
  for (const auto& [off, count] : layout) {
    if (count == 0) continue;
    put<uint64_t>(out, count);
    put<uint64_t>(out, block_checksum(&m.params[off], count));
    out.append(reinterpret_cast<const char*>(&m.params[off]), count * sizeof(double));
  }
  put<uint32_t>(out, static_cast<uint32_t>(m.history.size()));
  for (const EpochStats& e : m.history) {
    put<double>(out, e.train_loss);
    put<double>(out, e.validate_loss);
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write model file: " + path);
  f.write(out.data(), static_cast<long>(out.size()));
}

CnnModel load_cnn(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open model file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string in = ss.str();

  size_t pos = 0;
  if (in.size() < sizeof(kModelMagic) ||
      std::memcmp(in.data(), kModelMagic, sizeof(kModelMagic)) != 0)
    throw SchemaError("model file header is corrupted");
  pos = sizeof(kModelMagic);
  const uint32_t version = take<uint32_t>(in, pos);
  if (version != kModelVersion)
    throw UnsupportedVersion("model file version " + std::to_string(version) +
                             " is not supported");
  const uint64_t spec_len = take<uint64_t>(in, pos);
  if (pos + spec_len > in.size()) throw SchemaError("model file truncated");
  CnnModel m;
  m.spec = spec_from_json(in.substr(pos, spec_len));
  pos += spec_len;
  validate_spec(m.spec);

  m.params.assign(parameter_count(m.spec), 0.0);
  const auto layout = layer_param_layout(m.spec);
  const uint32_t blocks = take<uint32_t>(in, pos);
  uint32_t seen = 0;
  for (const auto& [off, count] : layout) {
    if (count == 0) continue;
    if (seen++ >= blocks) throw SchemaError("model file has too few weight blocks");
    const uint64_t stored_count = take<uint64_t>(in, pos);
    if (stored_count != count) throw SchemaError("model weight block has the wrong size");
    const uint64_t checksum = take<uint64_t>(in, pos);
    if (pos + count * sizeof(double) > in.size()) throw SchemaError("model file truncated");
    std::memcpy(&m.params[off], in.data() + pos, count * sizeof(double));
    pos += count * sizeof(double);
    if (block_checksum(&m.params[off], count) != checksum)
      throw SchemaError("model weight block checksum mismatch");
  }
  if (seen != blocks) throw SchemaError("model file has extra weight blocks");
  const uint32_t epochs = take<uint32_t>(in, pos);
  for (uint32_t e = 0; e < epochs; ++e) {
    EpochStats st;
    st.train_loss = take<double>(in, pos);
    st.validate_loss = take<double>(in, pos);
    m.history.push_back(st);
  }
  if (pos != in.size()) throw SchemaError("model file has trailing bytes");
  return m;
}

}  // namespace qcap
