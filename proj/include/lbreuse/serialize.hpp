#pragma once

// Versioned binary envelope shared by the policy and selector networks:
//   magic[4] | u32 version | u32 tensor count
//   | per tensor: u32 name length, name, u32 rows, u32 cols
//   | u64 value count | f64 values (little-endian)
//   | u64 trailer length | JSON trailer
// Integers are little-endian regardless of host order.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lbreuse/errors.hpp"
#include "lbreuse/nn.hpp"

namespace lbreuse {

inline constexpr std::uint32_t kEnvelopeVersion = 1;

namespace io {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}
inline void put_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, sizeof v);
  put_u64(os, v);
}
inline void put_str(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void need(std::istream& is, const char* what) {
  if (!is) throw ArtifactError(std::string("corrupt or truncated file while reading ") + what);
}
inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  need(is, "u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}
inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  need(is, "u64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}
inline double get_f64(std::istream& is) {
  const std::uint64_t v = get_u64(is);
  double d;
  std::memcpy(&d, &v, sizeof d);
  return d;
}
inline std::string get_str(std::istream& is, std::size_t max_len = 1u << 30) {
  const std::uint32_t n = get_u32(is);
  if (n > max_len) throw ArtifactError("corrupt file: implausible string length");
  std::string s(n, '\0');
  is.read(s.data(), n);
  need(is, "string");
  return s;
}

// Write to path via a temporary sibling and rename, so readers never see a
// half-written file.
template <class WriteFn>
void atomic_write(const std::string& path, WriteFn&& write) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ArtifactError("cannot write " + tmp);
    write(os);
    os.flush();
    if (!os) throw ArtifactError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw ArtifactError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

inline std::string read_file(const std::string& path, const std::string& hint = {}) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ArtifactError("missing artifact " + path + (hint.empty() ? "" : " (" + hint + ")"));
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace io

struct NetEnvelope {
  std::string magic;
  std::uint32_t version = kEnvelopeVersion;
  ParamLayout layout;
  std::vector<double> values;
  nlohmann::json meta = nlohmann::json::object();
};

inline void write_envelope(std::ostream& os, const NetEnvelope& e) {
  if (e.magic.size() != 4) throw InvalidArgument("envelope magic must be 4 bytes");
  if (e.values.size() != e.layout.total()) throw InvalidArgument("envelope values do not match layout");
  os.write(e.magic.data(), 4);
  io::put_u32(os, e.version);
  io::put_u32(os, static_cast<std::uint32_t>(e.layout.tensors().size()));
  for (const auto& t : e.layout.tensors()) {
    io::put_str(os, t.name);
    io::put_u32(os, static_cast<std::uint32_t>(t.rows));
    io::put_u32(os, static_cast<std::uint32_t>(t.cols));
  }
  io::put_u64(os, e.values.size());
  for (double v : e.values) io::put_f64(os, v);
  const std::string trailer = e.meta.dump();
  io::put_u64(os, trailer.size());
  os.write(trailer.data(), static_cast<std::streamsize>(trailer.size()));
}

inline NetEnvelope read_envelope(std::istream& is, const std::string& expected_magic) {
  NetEnvelope e;
  e.magic.assign(4, '\0');
  is.read(e.magic.data(), 4);
  io::need(is, "magic");
  if (e.magic != expected_magic) throw ArtifactError("bad magic: expected " + expected_magic);
  e.version = io::get_u32(is);
  if (e.version != kEnvelopeVersion) throw ArtifactError("unsupported format version " + std::to_string(e.version));
  const std::uint32_t n_tensors = io::get_u32(is);
  if (n_tensors > 4096) throw ArtifactError("corrupt file: implausible tensor count");
  for (std::uint32_t k = 0; k < n_tensors; ++k) {
    std::string name = io::get_str(is, 4096);
    const std::uint32_t rows = io::get_u32(is);
    const std::uint32_t cols = io::get_u32(is);
    e.layout.add(std::move(name), static_cast<int>(rows), static_cast<int>(cols));
  }
  const std::uint64_t n = io::get_u64(is);
  if (n != e.layout.total()) throw ArtifactError("corrupt file: value count does not match tensor shapes");
  e.values.resize(n);
  for (auto& v : e.values) v = io::get_f64(is);
  const std::uint64_t len = io::get_u64(is);
  if (len > (1ull << 32)) throw ArtifactError("corrupt file: implausible trailer length");
  std::string trailer(len, '\0');
  is.read(trailer.data(), static_cast<std::streamsize>(len));
  io::need(is, "JSON trailer");
  try {
    e.meta = nlohmann::json::parse(trailer);
  } catch (const nlohmann::json::exception& ex) {
    throw ArtifactError(std::string("corrupt JSON trailer: ") + ex.what());
  }
  return e;
}

// Stable hex digest of a JSON value (FNV-1a over its compact dump), used to
// tag artifacts with the configuration that produced them.
inline std::string config_hash(const nlohmann::json& j) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

}  // namespace lbreuse
