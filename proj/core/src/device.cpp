#include "qcap/device.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qcap/errors.hpp"

namespace qcap {

bool DeviceGraph::has_edge(int control, int target) const {
  return std::find(edges.begin(), edges.end(), std::make_pair(control, target)) != edges.end();
}

bool DeviceGraph::adjacent(int a, int b) const { return has_edge(a, b) || has_edge(b, a); }

std::vector<std::pair<int, int>> DeviceGraph::undirected_edges() const {
  std::set<std::pair<int, int>> seen;
  for (const auto& [a, b] : edges) seen.insert({std::min(a, b), std::max(a, b)});
  return {seen.begin(), seen.end()};
}

std::vector<int> DeviceGraph::neighbors(int q) const {
  std::set<int> out;
  for (const auto& [a, b] : edges) {
    if (a == q) out.insert(b);
    if (b == q) out.insert(a);
  }
  return {out.begin(), out.end()};
}

std::vector<std::string> validate_device(const DeviceGraph& dev) {
  std::vector<std::string> out;
  if (dev.n <= 0) out.push_back("device must have at least one qubit");
  if (static_cast<int>(dev.positions.size()) != dev.n)
    out.push_back("positions count does not match qubit count");
  std::set<std::pair<int, int>> pos_seen;
  for (const auto& p : dev.positions) {
    if (!pos_seen.insert(p).second) {
      std::ostringstream ss;
      ss << "duplicate grid position (" << p.first << "," << p.second << ")";
      out.push_back(ss.str());
    }
  }
  std::set<std::pair<int, int>> edge_seen;
  for (const auto& [a, b] : dev.edges) {
    std::ostringstream ss;
    if (a < 0 || a >= dev.n || b < 0 || b >= dev.n) {
      ss << "edge (" << a << "," << b << ") references unknown qubit";
      out.push_back(ss.str());
      continue;
    }
    if (a == b) {
      ss << "self edge on qubit " << a;
      out.push_back(ss.str());
      continue;
    }
    if (!edge_seen.insert({a, b}).second) {
      ss << "duplicate edge (" << a << "," << b << ")";
      out.push_back(ss.str());
      continue;
    }
    if (a < static_cast<int>(dev.positions.size()) && b < static_cast<int>(dev.positions.size())) {
      const auto [ra, ca] = dev.positions[static_cast<size_t>(a)];
      const auto [rb, cb] = dev.positions[static_cast<size_t>(b)];
      const int dr = std::abs(ra - rb), dc = std::abs(ca - cb);
      if (dr + dc != 1) {
        ss << "edge (" << a << "," << b << ") is not between grid neighbors";
        out.push_back(ss.str());
      }
    }
  }
  return out;
}

std::string device_to_json(const DeviceGraph& dev) {
  nlohmann::ordered_json j;
  j["name"] = dev.name;
  j["n"] = dev.n;
  auto& pos = j["positions"] = nlohmann::ordered_json::array();
  for (const auto& [r, c] : dev.positions) pos.push_back({r, c});
  auto& edges = j["edges"] = nlohmann::ordered_json::array();
  for (const auto& [a, b] : dev.edges) edges.push_back({a, b});
  return j.dump(2) + "\n";
}

DeviceGraph device_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("device file is not valid JSON: ") + e.what());
  }
  DeviceGraph dev;
  try {
    dev.name = j.value("name", std::string{});
    dev.n = j.at("n").get<int>();
    for (const auto& p : j.at("positions")) dev.positions.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
    for (const auto& e : j.at("edges")) dev.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("device file is missing required fields: ") + e.what());
  }
  const auto violations = validate_device(dev);
  if (!violations.empty()) throw SchemaError("invalid device: " + violations.front());
  return dev;
}

DeviceGraph load_device(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open device file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return device_from_json(ss.str());
}

void save_device(const DeviceGraph& dev, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write device file: " + path);
  out << device_to_json(dev);
}

DeviceGraph t5_device() {
  DeviceGraph dev;
  dev.name = "t5";
  dev.n = 5;
  dev.positions = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {2, 1}};
  const std::vector<std::pair<int, int>> base{{0, 1}, {1, 2}, {1, 3}, {3, 4}};
  for (const auto& [a, b] : base) {
    dev.edges.emplace_back(a, b);
    dev.edges.emplace_back(b, a);
  }
  return dev;
}

DeviceGraph grid_device(int rows, int cols) {
  DeviceGraph dev;
  dev.name = "grid" + std::to_string(rows) + "x" + std::to_string(cols);
  dev.n = rows * cols;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) dev.positions.emplace_back(r, c);
  auto id = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) {
        dev.edges.emplace_back(id(r, c), id(r, c + 1));
        dev.edges.emplace_back(id(r, c + 1), id(r, c));
      }
      if (r + 1 < rows) {
        dev.edges.emplace_back(id(r, c), id(r + 1, c));
        dev.edges.emplace_back(id(r + 1, c), id(r, c));
      }
    }
  }
  return dev;
}

}  // namespace qcap
