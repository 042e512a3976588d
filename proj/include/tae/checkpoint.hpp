#pragma once

// Checkpoint container: little-endian binary, magic "TAE1", version u32,
// record count u32, length-prefixed named tensor records
// (name, dtype tag, rank, extents, payload), trailing CRC32.

#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tae/tensor.hpp"

namespace tae {

inline constexpr char kCheckpointMagic[4] = {'T', 'A', 'E', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint8_t kDtypeF64 = 0;
inline constexpr std::uint8_t kDtypeByte = 1;

struct CheckpointData {
  std::map<std::string, Tensor> tensors;
  std::string config_json;
};

namespace detail {

inline void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& buf, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(buf, bits);
}

struct ByteReader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error("checkpoint truncated: record overruns file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
    return v;
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf[pos++]);
  }
  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

inline void append_record(std::string& body, const std::string& name, std::uint8_t dtype,
                          const std::vector<std::uint64_t>& extents, const std::string& payload) {
  std::string rec;
  put_u32(rec, static_cast<std::uint32_t>(name.size()));
  rec += name;
  rec.push_back(static_cast<char>(dtype));
  put_u32(rec, static_cast<std::uint32_t>(extents.size()));
  for (std::uint64_t e : extents) put_u64(rec, e);
  rec += payload;
  put_u64(body, rec.size());
  body += rec;
}

}  // namespace detail

inline void write_checkpoint(const std::filesystem::path& path,
                             const std::vector<std::pair<std::string, Tensor>>& tensors,
                             const std::string& config_json) {
  std::string out(kCheckpointMagic, 4);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(tensors.size() + (config_json.empty() ? 0 : 1)));
  for (const auto& [name, t] : tensors) {
    std::vector<std::uint64_t> extents(t.shape().begin(), t.shape().end());
    std::string payload;
    payload.reserve(t.size() * 8);
    for (std::size_t i = 0; i < t.size(); ++i) detail::put_f64(payload, t[i]);
    detail::append_record(out, name, kDtypeF64, extents, payload);
  }
  if (!config_json.empty()) {
    detail::append_record(out, "config_json", kDtypeByte, {config_json.size()}, config_json);
  }
  const auto crc = static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(out.data()), static_cast<uInt>(out.size())));
  detail::put_u32(out, crc);

  // write-temp-then-rename keeps loads atomic
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + tmp.string() + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("checkpoint: short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline CheckpointData read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  if (buf.size() < 16) throw std::runtime_error("checkpoint truncated: file too small");
  if (std::memcmp(buf.data(), kCheckpointMagic, 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic bytes (not a checkpoint file)");
  }

  const std::string body = buf.substr(0, buf.size() - 4);
  detail::ByteReader trailer{buf, buf.size() - 4};
  const std::uint32_t stored_crc = trailer.u32();
  const auto crc = static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
  if (crc != stored_crc) throw std::runtime_error("checkpoint checksum mismatch");

  detail::ByteReader r{body, 4};
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint version mismatch: file has " + std::to_string(version) +
                             ", expected " + std::to_string(kCheckpointVersion));
  }
  const std::uint32_t count = r.u32();

  CheckpointData data;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint64_t rec_len = r.u64();
    const std::size_t rec_end = r.pos + rec_len;
    r.need(rec_len);
    const std::uint32_t name_len = r.u32();
    const std::string name = r.bytes(name_len);
    const std::uint8_t dtype = r.u8();
    const std::uint32_t rank = r.u32();
    std::vector<std::uint64_t> extents(rank);
    std::uint64_t numel = 1;
    for (auto& e : extents) {
      e = r.u64();
      numel *= e;
    }
    if (dtype == kDtypeF64) {
      std::vector<double> values(numel);
      for (auto& v : values) v = r.f64();
      std::vector<std::size_t> shape(extents.begin(), extents.end());
      data.tensors.emplace(name, Tensor::from_data(std::move(shape), std::move(values)));
    } else if (dtype == kDtypeByte) {
      const std::string payload = r.bytes(numel);
      if (name == "config_json") data.config_json = payload;
    } else {
      throw std::runtime_error("checkpoint: unknown dtype tag " + std::to_string(dtype));
    }
    if (r.pos != rec_end) throw std::runtime_error("checkpoint truncated: malformed record '" + name + "'");
  }
  return data;
}

// Copies matching named tensors into the destination handles; shape
// mismatches and missing names are errors.
inline void assign_named_tensors(const std::vector<std::pair<std::string, Tensor>>& dest,
                                 const std::map<std::string, Tensor>& src) {
  for (const auto& [name, t] : dest) {
    auto it = src.find(name);
    if (it == src.end()) throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
    if (it->second.shape() != t.shape()) {
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
    }
    Tensor target = t;
    std::copy(it->second.data(), it->second.data() + t.size(), target.data());
  }
}

}  // namespace tae
