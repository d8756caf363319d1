#include "qcap/encode.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "qcap/errors.hpp"
#include "qcap/tableau.hpp"

namespace qcap {

namespace {
constexpr char kMagic[8] = {'Q', 'C', 'A', 'P', 'T', 'N', 'S', 'R'};
constexpr uint32_t kFormatVersion = 1;

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw SchemaError("tensor bytes truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}
}  // namespace

const std::vector<std::string>& ChannelLayout::names() {
  static const std::vector<std::string> n{"ZRot",     "Xp",       "Xm",     "CnotLeft",
                                          "CnotRight", "CnotUp",   "CnotDown", "SensX",
                                          "SensY",    "SensZ"};
  return n;
}

CircuitTensor encode(const Circuit& c, const DeviceGraph& dev, int d_max) {
  if (c.n_device != dev.n) throw DataError("circuit device size does not match device");
  if (c.depth() > d_max)
    throw DataError("circuit depth " + std::to_string(c.depth()) + " exceeds d_max " +
                    std::to_string(d_max));
  for (const int q : c.active)
    if (q < 0 || q >= dev.n) throw DataError("circuit uses a qubit off the device");

  CircuitTensor t;
  t.rows = dev.n;
  t.cols = d_max;
  t.ch = ChannelLayout::kChannels;
  t.data.assign(static_cast<size_t>(t.rows) * static_cast<size_t>(t.cols) *
                    static_cast<size_t>(t.ch),
                0.0);

  for (int l = 0; l < c.depth(); ++l) {
    for (int s = 0; s < c.width(); ++s) {
      const Gate& g = c.layers[static_cast<size_t>(l)][static_cast<size_t>(s)];
      const int q = c.active[static_cast<size_t>(s)];
      switch (g.kind) {
        case GateKind::Idle: break;
        case GateKind::ZRot: t.at(q, l, ChannelLayout::kZRot) = g.theta; break;
        case GateKind::Xp: t.at(q, l, ChannelLayout::kXp) = 1.0; break;
        case GateKind::Xm: t.at(q, l, ChannelLayout::kXm) = 1.0; break;
        case GateKind::CnotControl:
        case GateKind::CnotTarget: {
          const auto [r0, c0] = dev.positions[static_cast<size_t>(q)];
          const auto [r1, c1] = dev.positions[static_cast<size_t>(g.partner)];
          int channel;
          if (r1 == r0 && c1 == c0 - 1) channel = ChannelLayout::kCnotLeft;
          else if (r1 == r0 && c1 == c0 + 1) channel = ChannelLayout::kCnotRight;
          else if (c1 == c0 && r1 == r0 - 1) channel = ChannelLayout::kCnotUp;
          else if (c1 == c0 && r1 == r0 + 1) channel = ChannelLayout::kCnotDown;
          else throw DataError("CNOT partner is not a grid neighbor");
          t.at(q, l, channel) = g.kind == GateKind::CnotControl ? 1.0 : -1.0;
          break;
        }
      }
    }
  }

  const auto sens = sensitivity_channels(c);
  const int d = c.depth();
  for (int s = 0; s < c.width(); ++s) {
    const int q = c.active[static_cast<size_t>(s)];
    for (int l = 0; l < d; ++l)
      for (int a = 0; a < 3; ++a)
        t.at(q, l, ChannelLayout::kSensX + a) =
            sens[(static_cast<size_t>(s) * static_cast<size_t>(d) + static_cast<size_t>(l)) * 3 +
                 static_cast<size_t>(a)];
  }
  return t;
}

CircuitTensor strip_sensitivity(const CircuitTensor& t) {
  if (t.ch == ChannelLayout::kGateChannels)
    throw AlreadyStripped("tensor already has no sensitivity channels");
  if (t.ch != ChannelLayout::kChannels) throw DataError("unexpected tensor channel count");
  CircuitTensor out;
  out.rows = t.rows;
  out.cols = t.cols;
  out.ch = ChannelLayout::kGateChannels;
  out.data.resize(static_cast<size_t>(out.rows) * static_cast<size_t>(out.cols) *
                  static_cast<size_t>(out.ch));
  for (int i = 0; i < t.rows; ++i)
    for (int j = 0; j < t.cols; ++j)
      for (int k = 0; k < ChannelLayout::kGateChannels; ++k) out.at(i, j, k) = t.at(i, j, k);
  return out;
}

std::string tensor_to_bytes(const CircuitTensor& t) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put<uint32_t>(out, kFormatVersion);
  put<uint32_t>(out, static_cast<uint32_t>(t.rows));
  put<uint32_t>(out, static_cast<uint32_t>(t.cols));
  put<uint32_t>(out, static_cast<uint32_t>(t.ch));
  const auto& names = ChannelLayout::names();
  for (int k = 0; k < t.ch; ++k) {
    const std::string& name = names[static_cast<size_t>(k)];
    put<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out += name;
  }
  for (const double v : t.data) put<double>(out, v);
  return out;
}

CircuitTensor tensor_from_bytes(const std::string& bytes) {
  size_t pos = 0;
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw SchemaError("tensor bytes have a bad magic header");
  pos = sizeof(kMagic);
  const auto version = take<uint32_t>(bytes, pos);
  if (version != kFormatVersion)
    throw SchemaError("unsupported tensor format version " + std::to_string(version));
  CircuitTensor t;
  t.rows = static_cast<int>(take<uint32_t>(bytes, pos));
  t.cols = static_cast<int>(take<uint32_t>(bytes, pos));
  t.ch = static_cast<int>(take<uint32_t>(bytes, pos));
  if (t.rows <= 0 || t.cols <= 0 ||
      (t.ch != ChannelLayout::kChannels && t.ch != ChannelLayout::kGateChannels))
    throw SchemaError("tensor header has invalid dimensions");
  for (int k = 0; k < t.ch; ++k) {
    const auto len = take<uint32_t>(bytes, pos);
    if (pos + len > bytes.size()) throw SchemaError("tensor bytes truncated");
    const std::string name = bytes.substr(pos, len);
    pos += len;
    if (name != ChannelLayout::names()[static_cast<size_t>(k)])
      throw SchemaError("tensor channel name mismatch: " + name);
  }
  const size_t count = static_cast<size_t>(t.rows) * static_cast<size_t>(t.cols) *
                       static_cast<size_t>(t.ch);
  t.data.resize(count);
  for (size_t i = 0; i < count; ++i) t.data[i] = take<double>(bytes, pos);
  if (pos != bytes.size()) throw SchemaError("tensor bytes have trailing garbage");
  return t;
}

void save_tensor(const CircuitTensor& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write tensor file: " + path);
  const std::string bytes = tensor_to_bytes(t);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

CircuitTensor load_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open tensor file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return tensor_from_bytes(ss.str());
}

std::string tensor_debug_text(const CircuitTensor& t) {
  std::ostringstream ss;
  ss << "tensor " << t.rows << "x" << t.cols << "x" << t.ch << "\n";
  for (int k = 0; k < t.ch; ++k) {
    ss << "channel " << ChannelLayout::names()[static_cast<size_t>(k)] << "\n";
    for (int i = 0; i < t.rows; ++i) {
      for (int j = 0; j < t.cols; ++j) {
        if (j) ss << " ";
        ss << t.at(i, j, k);
      }
      ss << "\n";
    }
  }
  return ss.str();
}

}  // namespace qcap
