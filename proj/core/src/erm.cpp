#include "qcap/erm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "qcap/errors.hpp"
#include "qcap/hashing.hpp"

namespace qcap {

namespace {

double rate_or_throw(const std::map<std::pair<int, int>, double>& m, int cls, int q,
                     const char* what) {
  const auto it = m.find({cls, q});
  if (it == m.end())
    throw MissingRate(std::string("no ") + what + " rate for class " + std::to_string(cls) +
                      " on q" + std::to_string(q));
  return it->second;
}

}  // namespace

double erm_predict(const ErmParams& p, const Circuit& c) {
  double log_s = 0.0;
  for (int l = 0; l < c.depth(); ++l) {
    for (int s = 0; s < c.width(); ++s) {
      const Gate& g = c.layers[static_cast<size_t>(l)][static_cast<size_t>(s)];
      const int q = c.active[static_cast<size_t>(s)];
      switch (g.kind) {
        case GateKind::Idle: break;
        case GateKind::ZRot:
          if (std::abs(g.theta) > 1e-9)
            log_s += std::log1p(-rate_or_throw(p.one_qubit, 0, q, "one-qubit"));
          break;
        case GateKind::Xp: log_s += std::log1p(-rate_or_throw(p.one_qubit, 1, q, "one-qubit")); break;
        case GateKind::Xm: log_s += std::log1p(-rate_or_throw(p.one_qubit, 2, q, "one-qubit")); break;
        case GateKind::CnotControl: {
          const auto it = p.cnot.find({q, g.partner});
          if (it == p.cnot.end())
            throw MissingRate("no CNOT rate for q" + std::to_string(q) + "->q" +
                              std::to_string(g.partner));
          log_s += std::log1p(-it->second);
          break;
        }
        case GateKind::CnotTarget: break;
      }
    }
  }
  for (const int q : c.active) {
    if (q >= static_cast<int>(p.readout.size()))
      throw MissingRate("no readout rate for q" + std::to_string(q));
    log_s += std::log1p(-p.readout[static_cast<size_t>(q)]);
  }
  return std::exp(log_s);
}

ErmParams init_erm_for_device(const DeviceGraph& dev, double init_rate) {
  ErmParams p;
  for (int cls = 0; cls < 3; ++cls)
    for (int q = 0; q < dev.n; ++q) p.one_qubit[{cls, q}] = init_rate;
  for (const auto& e : dev.edges) p.cnot[{e.first, e.second}] = init_rate;
  p.readout.assign(static_cast<size_t>(dev.n), init_rate);
  return p;
}

namespace {

// Parameter vector layout for the fit: one_qubit entries in map order, then
// cnot entries in map order, then readout by qubit.
struct ParamIndex {
  std::vector<std::pair<int, int>> one_qubit_keys;
  std::vector<std::pair<int, int>> cnot_keys;
  size_t n_readout = 0;

  size_t size() const { return one_qubit_keys.size() + cnot_keys.size() + n_readout; }
};

ParamIndex make_index(const ErmParams& p) {
  ParamIndex ix;
  for (const auto& [k, v] : p.one_qubit) ix.one_qubit_keys.push_back(k);
  for (const auto& [k, v] : p.cnot) ix.cnot_keys.push_back(k);
  ix.n_readout = p.readout.size();
  return ix;
}

ErmParams params_from_vector(const ParamIndex& ix, const std::vector<double>& eps) {
  ErmParams p;
  size_t k = 0;
  for (const auto& key : ix.one_qubit_keys) p.one_qubit[key] = eps[k++];
  for (const auto& key : ix.cnot_keys) p.cnot[key] = eps[k++];
  p.readout.assign(eps.begin() + static_cast<long>(k), eps.end());
  return p;
}

// Sparse gate-count vector of a circuit under the fit layout.
std::vector<std::pair<size_t, double>> multiplicities(const ParamIndex& ix, const Circuit& c) {
  std::map<std::pair<int, int>, size_t> oq_pos, cn_pos;
  for (size_t i = 0; i < ix.one_qubit_keys.size(); ++i) oq_pos[ix.one_qubit_keys[i]] = i;
  for (size_t i = 0; i < ix.cnot_keys.size(); ++i)
    cn_pos[ix.cnot_keys[i]] = ix.one_qubit_keys.size() + i;

  std::vector<double> dense(ix.size(), 0.0);
  for (int l = 0; l < c.depth(); ++l) {
    for (int s = 0; s < c.width(); ++s) {
      const Gate& g = c.layers[static_cast<size_t>(l)][static_cast<size_t>(s)];
      const int q = c.active[static_cast<size_t>(s)];
      int cls = -1;
      switch (g.kind) {
        case GateKind::ZRot:
          if (std::abs(g.theta) > 1e-9) cls = 0;
          break;
        case GateKind::Xp: cls = 1; break;
        case GateKind::Xm: cls = 2; break;
        case GateKind::CnotControl: {
          const auto it = cn_pos.find({q, g.partner});
          if (it == cn_pos.end())
            throw MissingRate("circuit uses a CNOT edge the device lacks: q" + std::to_string(q) +
                              "->q" + std::to_string(g.partner));
          dense[it->second] += 1.0;
          break;
        }
        default: break;
      }
      if (cls >= 0) {
        const auto it = oq_pos.find({cls, q});
        if (it == oq_pos.end()) throw MissingRate("circuit uses a qubit the device lacks");
        dense[it->second] += 1.0;
      }
    }
  }
  const size_t readout_base = ix.one_qubit_keys.size() + ix.cnot_keys.size();
  for (const int q : c.active) dense[readout_base + static_cast<size_t>(q)] += 1.0;

  std::vector<std::pair<size_t, double>> sparse;
  for (size_t i = 0; i < dense.size(); ++i)
    if (dense[i] != 0.0) sparse.push_back({i, dense[i]});
  return sparse;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double bce(double label, double pred) {
  const double p = std::clamp(pred, 1e-7, 1.0 - 1e-7);
  return -(label * std::log(p) + (1.0 - label) * std::log1p(-p));
}

}  // namespace

ErmFitResult fit_erm(const CapabilityDataset& ds, const ErmFitConfig& cfg) {
  std::vector<const CapabilityRecord*> recs;
  for (const auto& r : ds.records)
    if (std::find(cfg.splits.begin(), cfg.splits.end(), r.split) != cfg.splits.end())
      recs.push_back(&r);
  if (recs.empty()) throw EmptyTrainingSplit("no records in the requested fit splits");

  const ParamIndex ix = make_index(init_erm_for_device(ds.device, 0.0));
  const size_t np = ix.size();
  std::vector<std::vector<std::pair<size_t, double>>> mult;
  mult.reserve(recs.size());
  for (const auto* r : recs) mult.push_back(multiplicities(ix, r->circuit));

  const double beta0 = std::log(cfg.init_rate / (1.0 - cfg.init_rate));
  std::vector<double> beta(np, beta0), m(np, 0.0), v(np, 0.0), grad(np), eps(np);
  const double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;

  ErmFitResult out;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> best_beta = beta;

  for (int it = 1; it <= cfg.max_iterations; ++it) {
    for (size_t k = 0; k < np; ++k) eps[k] = sigmoid(beta[k]);
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (size_t i = 0; i < recs.size(); ++i) {
      double log_s = 0.0;
      for (const auto& [k, cnt] : mult[i]) log_s += cnt * std::log1p(-eps[k]);
      const double s = std::exp(log_s);
      const double y = recs[i]->s_hat;
      loss += bce(y, s);
      // d BCE / d beta_k = [y - (1-y) s/(1-s)] * count_k * eps_k
      const double resid = y - (1.0 - y) * s / std::max(1.0 - s, 1e-12);
      for (const auto& [k, cnt] : mult[i]) grad[k] += resid * cnt * eps[k];
    }
    const double n = static_cast<double>(recs.size());
    loss /= n;
    double gnorm2 = 0.0;
    for (size_t k = 0; k < np; ++k) {
      grad[k] /= n;
      gnorm2 += grad[k] * grad[k];
    }
    if (loss < best_loss) {
      best_loss = loss;
      best_beta = beta;
    }
    out.iterations = it;
    if (std::sqrt(gnorm2) < cfg.gradient_tolerance) {
      out.converged = true;
      break;
    }
    const double c1 = 1.0 - std::pow(b1, it), c2 = 1.0 - std::pow(b2, it);
    for (size_t k = 0; k < np; ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * grad[k];
      v[k] = b2 * v[k] + (1.0 - b2) * grad[k] * grad[k];
      beta[k] -= cfg.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + adam_eps);
    }
  }

  for (size_t k = 0; k < np; ++k) eps[k] = sigmoid(best_beta[k]);
  out.params = params_from_vector(ix, eps);
  out.loss = best_loss;
  return out;
}

namespace {

void check_rate(double r, const std::string& what) {
  if (!(r >= 0.0 && r < 1.0))
    throw RateOutOfRange(what + " rate " + std::to_string(r) + " outside [0, 1)");
}

}  // namespace

std::string erm_to_json(const ErmParams& p, const DeviceGraph& dev) {
  nlohmann::ordered_json j;
  j["format"] = "erm-rates";
  j["format_version"] = 1;
  j["device_hash"] = content_hash(device_to_json(dev));
  nlohmann::ordered_json oq = nlohmann::ordered_json::array();
  for (const auto& [k, v] : p.one_qubit)
    oq.push_back({{"class", k.first}, {"qubit", k.second}, {"rate", v}});
  j["one_qubit"] = oq;
  nlohmann::ordered_json cn = nlohmann::ordered_json::array();
  for (const auto& [k, v] : p.cnot)
    cn.push_back({{"control", k.first}, {"target", k.second}, {"rate", v}});
  j["cnot"] = cn;
  j["readout"] = p.readout;
  return j.dump(2);
}

ErmParams erm_from_json(const std::string& text, const DeviceGraph& dev) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("rates file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "erm-rates")
      throw SchemaError("rates file has the wrong format tag");
    if (j.at("format_version").get<int>() != 1)
      throw UnsupportedVersion("rates file version is not 1");
    if (j.at("device_hash").get<std::string>() != content_hash(device_to_json(dev)))
      throw SchemaError("rates file was written for a different device");
    ErmParams p;
    for (const auto& e : j.at("one_qubit")) {
      const double r = e.at("rate").get<double>();
      check_rate(r, "one-qubit");
      p.one_qubit[{e.at("class").get<int>(), e.at("qubit").get<int>()}] = r;
    }
    for (const auto& e : j.at("cnot")) {
      const double r = e.at("rate").get<double>();
      check_rate(r, "CNOT");
      p.cnot[{e.at("control").get<int>(), e.at("target").get<int>()}] = r;
    }
    p.readout = j.at("readout").get<std::vector<double>>();
    for (const double r : p.readout) check_rate(r, "readout");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("rates file schema: ") + e.what());
  }
}

void save_erm(const ErmParams& p, const DeviceGraph& dev, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write rates file: " + path);
  out << erm_to_json(p, dev) << "\n";
}

ErmParams load_device_erm(const std::string& path, const DeviceGraph& dev) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open rates file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return erm_from_json(ss.str(), dev);
}

}  // namespace qcap
