#include "qcap/noise.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qcap/errors.hpp"

namespace qcap {
namespace {

const char* kind_name(ErrorModelKind k) {
  switch (k) {
    case ErrorModelKind::LocalPauliStochastic: return "local_pauli_stochastic";
    case ErrorModelKind::GrowingPains: return "growing_pains";
    case ErrorModelKind::DoubleTrouble: return "double_trouble";
    case ErrorModelKind::CoherentLocal: return "coherent_local";
  }
  return "?";
}

ErrorModelKind kind_from_name(const std::string& s) {
  if (s == "local_pauli_stochastic") return ErrorModelKind::LocalPauliStochastic;
  if (s == "growing_pains") return ErrorModelKind::GrowingPains;
  if (s == "double_trouble") return ErrorModelKind::DoubleTrouble;
  if (s == "coherent_local") return ErrorModelKind::CoherentLocal;
  throw SchemaError("unknown error model kind: " + s);
}

const char* class_name(int c) {
  switch (c) {
    case 0: return "ZRot";
    case 1: return "Xp";
    case 2: return "Xm";
  }
  return "?";
}

int class_from_name(const std::string& s) {
  if (s == "ZRot") return 0;
  if (s == "Xp") return 1;
  if (s == "Xm") return 2;
  throw SchemaError("unknown gate class: " + s);
}

void check_rate(double r, const std::string& what) {
  if (!(r >= 0.0) || r >= 1.0) throw RateOutOfRange(what + " rate " + std::to_string(r));
}

bool is_cnot(const Gate& g) {
  return g.kind == GateKind::CnotControl || g.kind == GateKind::CnotTarget;
}

}  // namespace

double PauliTriple::component(int axis) const {
  switch (axis) {
    case 1: return x;
    case 2: return y;
    case 3: return z;
  }
  throw ConfigError("pauli axis must be 1, 2 or 3");
}

size_t LpsRates::parameter_count() const {
  return 3 * one_qubit.size() + 3 * cnot.size() + readout.size();
}

ErrorModel sample_biased_lps(const DeviceGraph& dev, Rng& rng, double max_1q, double max_2q) {
  ErrorModel m;
  m.kind = ErrorModelKind::LocalPauliStochastic;
  for (int q = 0; q < dev.n; ++q) {
    for (int cls = 0; cls < 3; ++cls) {
      PauliTriple t;
      const int axis = 1 + static_cast<int>(rng.below(3));
      const double rate = rng.uniform() * max_1q;
      (axis == 1 ? t.x : axis == 2 ? t.y : t.z) = rate;
      m.rates.one_qubit[{cls, q}] = t;
    }
  }
  for (const auto& [a, b] : dev.edges) {
    for (const int acted : {a, b}) {
      PauliTriple t;
      const int axis = 1 + static_cast<int>(rng.below(3));
      const double rate = rng.uniform() * max_2q;
      (axis == 1 ? t.x : axis == 2 ? t.y : t.z) = rate;
      m.rates.cnot[{a, b, acted}] = t;
    }
  }
  m.rates.readout.assign(static_cast<size_t>(dev.n), 0.0);
  return m;
}

ErrorModel sample_uniform_lps(const DeviceGraph& dev, Rng& rng, double hi) {
  ErrorModel m;
  m.kind = ErrorModelKind::LocalPauliStochastic;
  for (int q = 0; q < dev.n; ++q) {
    for (int cls = 0; cls < 3; ++cls) {
      PauliTriple t{rng.uniform() * hi, rng.uniform() * hi, rng.uniform() * hi};
      m.rates.one_qubit[{cls, q}] = t;
    }
  }
  for (const auto& [a, b] : dev.edges) {
    for (const int acted : {a, b}) {
      PauliTriple t{rng.uniform() * hi, rng.uniform() * hi, rng.uniform() * hi};
      m.rates.cnot[{a, b, acted}] = t;
    }
  }
  m.rates.readout.assign(static_cast<size_t>(dev.n), hi);
  return m;
}

ErrorModel sample_coherent_model(const DeviceGraph& dev, Rng& rng, double target_infidelity) {
  if (!(target_infidelity > 0.0) || target_infidelity >= 1.0)
    throw ConfigError("coherent target infidelity must be in (0, 1)");
  ErrorModel m;
  m.kind = ErrorModelKind::CoherentLocal;
  m.coherent.angle = 2.0 * std::asin(std::sqrt(target_infidelity));
  for (int q = 0; q < dev.n; ++q)
    for (int cls = 0; cls < 3; ++cls)
      m.coherent.one_qubit_axis[{cls, q}] = 1 + static_cast<int>(rng.below(3));
  for (const auto& [a, b] : dev.edges) {
    const int idx = 1 + static_cast<int>(rng.below(15));  // skip II
    m.coherent.cnot_axes[{a, b}] = {idx / 4, idx % 4};
  }
  m.rates.readout.assign(static_cast<size_t>(dev.n), 0.0);
  return m;
}

PauliTriple base_triple(const ErrorModel& m, const Circuit& c, int layer, int slot) {
  const Gate& g = c.layers[static_cast<size_t>(layer)][static_cast<size_t>(slot)];
  const int q = c.active[static_cast<size_t>(slot)];
  switch (g.kind) {
    case GateKind::Idle: return {};
    case GateKind::ZRot: {
      if (std::abs(g.theta) < 1e-9) return {};
      const auto it = m.rates.one_qubit.find({0, q});
      if (it == m.rates.one_qubit.end())
        throw MissingRate("no ZRot rates for qubit q" + std::to_string(q));
      return it->second;
    }
    case GateKind::Xp:
    case GateKind::Xm: {
      const int cls = g.kind == GateKind::Xp ? 1 : 2;
      const auto it = m.rates.one_qubit.find({cls, q});
      if (it == m.rates.one_qubit.end())
        throw MissingRate(std::string("no ") + class_name(cls) + " rates for qubit q" +
                          std::to_string(q));
      return it->second;
    }
    case GateKind::CnotControl:
    case GateKind::CnotTarget: {
      const int control = g.kind == GateKind::CnotControl ? q : g.partner;
      const int target = g.kind == GateKind::CnotControl ? g.partner : q;
      const auto it = m.rates.cnot.find({control, target, q});
      if (it == m.rates.cnot.end())
        throw MissingRate("no CNOT rates for edge q" + std::to_string(control) + "->q" +
                          std::to_string(target));
      return it->second;
    }
  }
  return {};
}

double growing_pains_rate(double eps, int layer, double max_ratio, double tau) {
  // Equal to (2 eps + eps_max (e^{l tau} - 1)) / (e^{l tau} + 1), written to
  // stay finite when e^{l tau} overflows.
  const double eps_max = max_ratio * eps;
  const double denom = std::exp(static_cast<double>(layer) * tau) + 1.0;
  if (std::isinf(denom)) return eps_max;
  return eps_max + 2.0 * (eps - eps_max) / denom;
}

PauliTriple effective_triple(const ErrorModel& m, const Circuit& c, int layer, int slot) {
  if (!m.is_stochastic())
    throw ModelKindMismatch("coherent models have no stochastic rates");
  PauliTriple t = base_triple(m, c, layer, slot);
  switch (m.kind) {
    case ErrorModelKind::LocalPauliStochastic: break;
    case ErrorModelKind::GrowingPains:
      t.x = growing_pains_rate(t.x, layer, m.gp_max_ratio, m.gp_tau);
      t.y = growing_pains_rate(t.y, layer, m.gp_max_ratio, m.gp_tau);
      t.z = growing_pains_rate(t.z, layer, m.gp_max_ratio, m.gp_tau);
      break;
    case ErrorModelKind::DoubleTrouble: {
      const Gate& g = c.layers[static_cast<size_t>(layer)][static_cast<size_t>(slot)];
      if (layer > 0 && is_cnot(g) &&
          is_cnot(c.layers[static_cast<size_t>(layer - 1)][static_cast<size_t>(slot)])) {
        t.x = 1.0 - (1.0 - t.x) * (1.0 - m.dt_add);
        t.y = 1.0 - (1.0 - t.y) * (1.0 - m.dt_add);
        t.z = 1.0 - (1.0 - t.z) * (1.0 - m.dt_add);
      }
      break;
    }
    case ErrorModelKind::CoherentLocal: break;
  }
  if (t.total() >= 1.0)
    throw NumericalError("total per-location error probability reached 1");
  return t;
}

double effective_rate(const ErrorModel& m, const Circuit& c, int layer, int slot, int axis) {
  return effective_triple(m, c, layer, slot).component(axis);
}

std::string model_to_json(const ErrorModel& m) {
  nlohmann::ordered_json j;
  j["kind"] = kind_name(m.kind);
  if (m.is_stochastic()) {
    auto& one = j["one_qubit"] = nlohmann::ordered_json::array();
    for (const auto& [key, t] : m.rates.one_qubit) {
      one.push_back({{"gate", class_name(key.first)},
                     {"qubit", key.second},
                     {"x", t.x},
                     {"y", t.y},
                     {"z", t.z}});
    }
    auto& cn = j["cnot"] = nlohmann::ordered_json::array();
    for (const auto& [key, t] : m.rates.cnot) {
      cn.push_back({{"control", std::get<0>(key)},
                    {"target", std::get<1>(key)},
                    {"acted", std::get<2>(key)},
                    {"x", t.x},
                    {"y", t.y},
                    {"z", t.z}});
    }
    j["readout"] = m.rates.readout;
    if (m.kind == ErrorModelKind::GrowingPains) {
      j["gp_max_ratio"] = m.gp_max_ratio;
      j["gp_tau"] = m.gp_tau;
    }
    if (m.kind == ErrorModelKind::DoubleTrouble) j["dt_add"] = m.dt_add;
  } else {
    j["angle"] = m.coherent.angle;
    auto& one = j["one_qubit_axis"] = nlohmann::ordered_json::array();
    for (const auto& [key, axis] : m.coherent.one_qubit_axis)
      one.push_back({{"gate", class_name(key.first)}, {"qubit", key.second}, {"axis", axis}});
    auto& cn = j["cnot_axes"] = nlohmann::ordered_json::array();
    for (const auto& [key, axes] : m.coherent.cnot_axes)
      cn.push_back({{"control", key.first},
                    {"target", key.second},
                    {"control_axis", axes.first},
                    {"target_axis", axes.second}});
    j["readout"] = m.rates.readout;
  }
  return j.dump(2) + "\n";
}

ErrorModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("model file is not valid JSON: ") + e.what());
  }
  ErrorModel m;
  try {
    m.kind = kind_from_name(j.at("kind").get<std::string>());
    if (m.is_stochastic()) {
      for (const auto& e : j.value("one_qubit", nlohmann::json::array())) {
        PauliTriple t{e.at("x").get<double>(), e.at("y").get<double>(), e.at("z").get<double>()};
        check_rate(t.x, "one_qubit x");
        check_rate(t.y, "one_qubit y");
        check_rate(t.z, "one_qubit z");
        m.rates.one_qubit[{class_from_name(e.at("gate").get<std::string>()),
                           e.at("qubit").get<int>()}] = t;
      }
      for (const auto& e : j.value("cnot", nlohmann::json::array())) {
        PauliTriple t{e.at("x").get<double>(), e.at("y").get<double>(), e.at("z").get<double>()};
        check_rate(t.x, "cnot x");
        check_rate(t.y, "cnot y");
        check_rate(t.z, "cnot z");
        m.rates.cnot[{e.at("control").get<int>(), e.at("target").get<int>(),
                      e.at("acted").get<int>()}] = t;
      }
      for (const auto& r : j.value("readout", nlohmann::json::array())) {
        check_rate(r.get<double>(), "readout");
        m.rates.readout.push_back(r.get<double>());
      }
      m.gp_max_ratio = j.value("gp_max_ratio", m.gp_max_ratio);
      m.gp_tau = j.value("gp_tau", m.gp_tau);
      m.dt_add = j.value("dt_add", m.dt_add);
    } else {
      m.coherent.angle = j.at("angle").get<double>();
      for (const auto& e : j.value("one_qubit_axis", nlohmann::json::array()))
        m.coherent.one_qubit_axis[{class_from_name(e.at("gate").get<std::string>()),
                                   e.at("qubit").get<int>()}] = e.at("axis").get<int>();
      for (const auto& e : j.value("cnot_axes", nlohmann::json::array()))
        m.coherent.cnot_axes[{e.at("control").get<int>(), e.at("target").get<int>()}] = {
            e.at("control_axis").get<int>(), e.at("target_axis").get<int>()};
      for (const auto& r : j.value("readout", nlohmann::json::array())) {
        check_rate(r.get<double>(), "readout");
        m.rates.readout.push_back(r.get<double>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("model file is missing required fields: ") + e.what());
  }
  return m;
}

void save_model(const ErrorModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path);
  out << model_to_json(m);
}

ErrorModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace qcap
