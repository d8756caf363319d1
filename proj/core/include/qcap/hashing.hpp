#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

namespace qcap {

// FNV-1a, used to stamp artifacts with the inputs they were derived from.
// Not cryptographic; reproducibility checks compare full bytes anyway.
inline uint64_t fnv1a(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

inline std::string content_hash(const std::string& bytes) { return hex64(fnv1a(bytes)); }

inline std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return content_hash(ss.str());
}

}  // namespace qcap
