#pragma once

#include <string>
#include <utility>
#include <vector>

namespace qcap {

// Qubit connectivity with grid placement. Edges are directed (control ->
// target availability of the two-qubit gate); devices that support both
// orientations list both. Positions are (row, col) on an integer grid and
// feed the direction channels of the circuit encoding.
struct DeviceGraph {
  std::string name;
  int n = 0;
  std::vector<std::pair<int, int>> positions;
  std::vector<std::pair<int, int>> edges;

  bool has_edge(int control, int target) const;
  bool adjacent(int a, int b) const;
  std::vector<std::pair<int, int>> undirected_edges() const;
  std::vector<int> neighbors(int q) const;
};

// Violations are returned as human-readable strings; empty means valid.
std::vector<std::string> validate_device(const DeviceGraph& dev);

std::string device_to_json(const DeviceGraph& dev);
DeviceGraph device_from_json(const std::string& text);
DeviceGraph load_device(const std::string& path);
void save_device(const DeviceGraph& dev, const std::string& path);

// Five qubits in a T: a row of three, plus two hanging off the middle.
DeviceGraph t5_device();
DeviceGraph grid_device(int rows, int cols);

}  // namespace qcap
