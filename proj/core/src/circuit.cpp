#include "qcap/circuit.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "qcap/errors.hpp"

namespace qcap {
namespace {

constexpr double kAngleTol = 1e-9;

const char* kind_name(GateKind k) {
  switch (k) {
    case GateKind::Idle: return "Idle";
    case GateKind::ZRot: return "ZRot";
    case GateKind::Xp: return "Xp";
    case GateKind::Xm: return "Xm";
    case GateKind::CnotControl: return "CnotControl";
    case GateKind::CnotTarget: return "CnotTarget";
  }
  return "?";
}

std::string zrot_token(double theta) {
  if (std::abs(theta + kPi / 2) < kAngleTol) return "Z(-pi/2)";
  if (std::abs(theta) < kAngleTol) return "Z(0)";
  if (std::abs(theta - kPi / 2) < kAngleTol) return "Z(pi/2)";
  if (std::abs(theta - kPi) < kAngleTol) return "Z(pi)";
  throw DataError("cannot serialize non-canonical ZRot angle");
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

int parse_qubit_label(const std::string& s, const std::string& context) {
  if (s.size() < 2 || s[0] != 'q') throw DataError("bad qubit label '" + s + "' in " + context);
  for (size_t i = 1; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i])))
      throw DataError("bad qubit label '" + s + "' in " + context);
  return std::stoi(s.substr(1));
}

Gate parse_token(const std::string& tok) {
  if (tok == "I") return Gate::idle();
  if (tok == "Xp") return Gate::xp();
  if (tok == "Xm") return Gate::xm();
  if (tok == "Z(-pi/2)") return Gate::zrot(-kPi / 2);
  if (tok == "Z(0)") return Gate::zrot(0.0);
  if (tok == "Z(pi/2)") return Gate::zrot(kPi / 2);
  if (tok == "Z(pi)") return Gate::zrot(kPi);
  if (tok.rfind("C:", 0) == 0) return Gate::cnot_control(parse_qubit_label(tok.substr(2), "C token"));
  if (tok.rfind("T:", 0) == 0) return Gate::cnot_target(parse_qubit_label(tok.substr(2), "T token"));
  if (tok.rfind("Z(", 0) == 0) throw DataError("ZRot angle not in allowed set: " + tok);
  throw DataError("unknown gate token: " + tok);
}

}  // namespace

int Circuit::slot_of(int q) const {
  const auto it = std::find(active.begin(), active.end(), q);
  return it == active.end() ? -1 : static_cast<int>(it - active.begin());
}

bool is_allowed_zrot_angle(double theta) {
  for (const double a : zrot_angles())
    if (std::abs(theta - a) < kAngleTol) return true;
  return false;
}

std::vector<std::string> validate_circuit(const Circuit& c, const DeviceGraph& dev) {
  std::vector<std::string> out;
  if (c.n_device != dev.n) out.push_back("circuit device size does not match device");
  if (c.active.empty()) out.push_back("circuit has no active qubits");
  std::set<int> seen;
  for (const int q : c.active) {
    if (q < 0 || q >= dev.n) out.push_back("active qubit q" + std::to_string(q) + " not on device");
    else if (!seen.insert(q).second) out.push_back("duplicate active qubit q" + std::to_string(q));
  }
  for (size_t l = 0; l < c.layers.size(); ++l) {
    const Layer& layer = c.layers[l];
    const std::string where = "layer " + std::to_string(l);
    if (layer.size() != c.active.size()) {
      out.push_back(where + " has " + std::to_string(layer.size()) + " gates for " +
                    std::to_string(c.active.size()) + " active qubits");
      continue;
    }
    for (size_t s = 0; s < layer.size(); ++s) {
      const Gate& g = layer[s];
      const int q = c.active[s];
      const std::string loc = where + ", q" + std::to_string(q);
      switch (g.kind) {
        case GateKind::Idle:
        case GateKind::Xp:
        case GateKind::Xm:
          if (g.partner != -1) out.push_back(loc + ": " + kind_name(g.kind) + " has a partner");
          break;
        case GateKind::ZRot:
          if (g.partner != -1) out.push_back(loc + ": ZRot has a partner");
          if (!is_allowed_zrot_angle(g.theta)) out.push_back(loc + ": ZRot angle not in allowed set");
          break;
        case GateKind::CnotControl:
        case GateKind::CnotTarget: {
          const int p = g.partner;
          const int pslot = c.slot_of(p);
          if (pslot < 0) {
            out.push_back(loc + ": CNOT partner q" + std::to_string(p) + " is not active");
            break;
          }
          const Gate& pg = layer[static_cast<size_t>(pslot)];
          const GateKind want =
              g.kind == GateKind::CnotControl ? GateKind::CnotTarget : GateKind::CnotControl;
          if (pg.kind != want || pg.partner != q)
            out.push_back(loc + ": CNOT pairing with q" + std::to_string(p) + " is not mutual");
          const int control = g.kind == GateKind::CnotControl ? q : p;
          const int target = g.kind == GateKind::CnotControl ? p : q;
          if (g.kind == GateKind::CnotControl && !dev.has_edge(control, target))
            out.push_back(loc + ": no directed edge q" + std::to_string(control) + "->q" +
                          std::to_string(target));
          break;
        }
      }
    }
  }
  return out;
}

std::string serialize_circuit(const Circuit& c) {
  std::ostringstream ss;
  ss << "qubits: ";
  for (size_t i = 0; i < c.active.size(); ++i) {
    if (i) ss << ",";
    ss << "q" << c.active[i];
  }
  ss << "\n";
  for (const Layer& layer : c.layers) {
    for (size_t s = 0; s < layer.size(); ++s) {
      if (s) ss << " ";
      const Gate& g = layer[s];
      switch (g.kind) {
        case GateKind::Idle: ss << "I"; break;
        case GateKind::ZRot: ss << zrot_token(g.theta); break;
        case GateKind::Xp: ss << "Xp"; break;
        case GateKind::Xm: ss << "Xm"; break;
        case GateKind::CnotControl: ss << "C:q" << g.partner; break;
        case GateKind::CnotTarget: ss << "T:q" << g.partner; break;
      }
    }
    ss << "\n";
  }
  return ss.str();
}

Circuit parse_circuit(const std::string& text, int n_device) {
  std::istringstream in(text);
  std::string line;
  Circuit c;
  c.n_device = n_device;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!have_header) {
      const auto pos = line.find("qubits:");
      if (pos == std::string::npos) throw DataError("circuit text must start with a qubits: header");
      std::string rest = line.substr(pos + 7);
      for (char& ch : rest)
        if (ch == ',') ch = ' ';
      for (const auto& label : split_ws(rest)) c.active.push_back(parse_qubit_label(label, "header"));
      if (c.active.empty()) throw DataError("qubits: header lists no qubits");
      std::set<int> seen;
      for (const int q : c.active) {
        if (q < 0 || q >= n_device)
          throw DataError("qubit q" + std::to_string(q) + " out of range for a device of " +
                          std::to_string(n_device) + " qubits");
        if (!seen.insert(q).second) throw DataError("duplicate qubit q" + std::to_string(q));
      }
      have_header = true;
      continue;
    }
    const auto tokens = split_ws(line);
    if (tokens.size() != c.active.size())
      throw DataError("layer line has " + std::to_string(tokens.size()) + " tokens for " +
                      std::to_string(c.active.size()) + " qubits");
    Layer layer;
    layer.reserve(tokens.size());
    for (const auto& tok : tokens) layer.push_back(parse_token(tok));
    c.layers.push_back(std::move(layer));
  }
  if (!have_header) throw DataError("circuit text has no qubits: header");
  return c;
}

Gate inverse_gate(const Gate& g) {
  switch (g.kind) {
    case GateKind::ZRot: {
      // pi maps to pi (equal mod 2*pi); other angles negate.
      if (std::abs(g.theta - kPi) < kAngleTol) return Gate::zrot(kPi);
      return Gate::zrot(-g.theta);
    }
    case GateKind::Xp: return Gate::xm();
    case GateKind::Xm: return Gate::xp();
    default: return g;
  }
}

Circuit inverse_circuit(const Circuit& c) {
  Circuit inv;
  inv.n_device = c.n_device;
  inv.active = c.active;
  inv.layers.reserve(c.layers.size());
  for (auto it = c.layers.rbegin(); it != c.layers.rend(); ++it) {
    Layer layer;
    layer.reserve(it->size());
    for (const Gate& g : *it) layer.push_back(inverse_gate(g));
    inv.layers.push_back(std::move(layer));
  }
  return inv;
}

}  // namespace qcap
