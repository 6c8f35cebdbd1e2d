#pragma once

// Packed chunk shards ("UACT" v1). All integers and floats little-endian.
//
//   magic   "UACT"            4 bytes
//   version u16               = 1
//   H       u32               chunk length
//   dims    u32               = 14
//   count   u32               chunks in this shard
//   count x {
//     id_len      u16
//     id          id_len bytes, UTF-8
//     start_frame u32
//     validity    u16
//     arm_mask    u8          bit 0 left, bit 1 right
//     actions     H*14 f32    row-major
//     state       14 f32
//   }
//
// A JSON sidecar lists every shard file with the byte offset of each chunk.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "uact/bytes.hpp"
#include "uact/episode_io.hpp"
#include "uact/error.hpp"
#include "uact/standardize.hpp"

namespace uact {

inline constexpr std::uint16_t kShardVersion = 1;
inline constexpr char kShardMagic[4] = {'U', 'A', 'C', 'T'};

struct EncodedShard {
  std::string bytes;
  std::vector<std::uint64_t> offsets;  // byte offset of each chunk record
};

inline EncodedShard encode_shard(const std::vector<ActionChunk>& chunks, int horizon) {
  detail::ByteWriter w;
  w.bytes(kShardMagic, 4);
  w.u16(kShardVersion);
  w.u32(static_cast<std::uint32_t>(horizon));
  w.u32(kUnifiedDims);
  w.u32(static_cast<std::uint32_t>(chunks.size()));
  EncodedShard out;
  for (const auto& c : chunks) {
    if (c.horizon() != horizon) throw Error("chunk-shape", "chunk length differs from shard header");
    if (c.episode_id.size() > 0xFFFF) throw Error("chunk-id-too-long", "episode id exceeds 65535 bytes");
    out.offsets.push_back(w.size());
    w.u16(static_cast<std::uint16_t>(c.episode_id.size()));
    w.bytes(c.episode_id.data(), c.episode_id.size());
    w.u32(c.start_frame);
    w.u16(c.validity);
    w.u8(static_cast<std::uint8_t>((c.arm_mask[0] ? 1 : 0) | (c.arm_mask[1] ? 2 : 0)));
    for (int r = 0; r < horizon; ++r) {
      for (int k = 0; k < kUnifiedDims; ++k) w.f32(static_cast<float>(c.actions(r, k)));
    }
    for (double s : c.state) w.f32(static_cast<float>(s));
  }
  out.bytes = w.data();
  return out;
}

// Values come back widened from f32.
inline std::vector<ActionChunk> decode_shard(std::string_view bytes, const std::string& what = "shard") {
  detail::ByteReader r(bytes, what);
  if (r.str(4) != std::string_view(kShardMagic, 4)) throw Error("bad-magic", what + ": not a UACT shard");
  const auto version = r.u16();
  if (version != kShardVersion) throw Error("bad-version", what + ": unsupported version " + std::to_string(version));
  const auto horizon = r.u32();
  const auto dims = r.u32();
  if (dims != kUnifiedDims) throw Error("bad-dims", what + ": expected 14 dims");
  if (horizon == 0 || horizon > 65535) throw Error("bad-horizon", what + ": invalid chunk length");
  const auto count = r.u32();
  std::vector<ActionChunk> out;
  out.reserve(std::min<std::uint32_t>(count, 1u << 20));
  for (std::uint32_t i = 0; i < count; ++i) {
    ActionChunk c;
    c.episode_id = r.str(r.u16());
    c.start_frame = r.u32();
    c.validity = r.u16();
    const auto mask = r.u8();
    c.arm_mask = {(mask & 1) != 0, (mask & 2) != 0};
    c.actions = ChunkMatrix::Zero(horizon, kUnifiedDims);
    for (std::uint32_t row = 0; row < horizon; ++row) {
      for (int k = 0; k < kUnifiedDims; ++k) c.actions(row, k) = r.f32();
    }
    for (auto& s : c.state) s = r.f32();
    if (c.validity > horizon) throw Error("bad-validity", what + ": validity exceeds chunk length");
    out.push_back(std::move(c));
  }
  if (!r.done()) throw Error("trailing-bytes", what + ": trailing bytes after last chunk");
  return out;
}

// Splits chunks into shards of at most `per_shard` records named
// <prefix>-00000.uact, ... inside `dir`, and writes <prefix>.json beside them.
inline json write_shards(const std::string& dir, const std::string& prefix, const std::vector<ActionChunk>& chunks,
                         int horizon, std::size_t per_shard = 4096) {
  if (per_shard == 0) throw Error("bad-config", "per_shard must be positive");
  json shards = json::array();
  for (std::size_t begin = 0, index = 0; begin < chunks.size() || (chunks.empty() && index == 0);
       begin += per_shard, ++index) {
    const std::size_t end = std::min(chunks.size(), begin + per_shard);
    const std::vector<ActionChunk> part(chunks.begin() + static_cast<std::ptrdiff_t>(begin),
                                        chunks.begin() + static_cast<std::ptrdiff_t>(end));
    const auto enc = encode_shard(part, horizon);
    char name[64];
    std::snprintf(name, sizeof name, "-%05zu.uact", index);
    const std::string file = prefix + name;
    write_text_file((std::filesystem::path(dir) / file).string(), enc.bytes);
    shards.push_back({{"file", file}, {"chunk_count", part.size()}, {"bytes", enc.bytes.size()}, {"offsets", enc.offsets}});
    if (chunks.empty()) break;
  }
  json sidecar{{"format", "uact-shards"},
               {"version", kShardVersion},
               {"H", horizon},
               {"dims", kUnifiedDims},
               {"total_chunks", chunks.size()},
               {"shards", shards}};
  write_json_file((std::filesystem::path(dir) / (prefix + ".json")).string(), sidecar);
  return sidecar;
}

// Loads every shard listed by a sidecar and checks the offsets it records.
inline std::vector<ActionChunk> read_shards(const std::string& sidecar_path) {
  const json sidecar = read_json_file(sidecar_path);
  if (sidecar.value("format", "") != "uact-shards" || sidecar.value("version", 0) != kShardVersion) {
    throw Error("bad-sidecar", sidecar_path + ": not a uact-shards v1 sidecar");
  }
  const auto dir = std::filesystem::path(sidecar_path).parent_path();
  std::vector<ActionChunk> all;
  for (const auto& s : sidecar.at("shards")) {
    const auto path = (dir / s.at("file").get<std::string>()).string();
    const auto bytes = detail::read_binary_file(path);
    auto part = decode_shard(bytes, path);
    if (part.size() != s.at("chunk_count").get<std::size_t>() || bytes.size() != s.at("bytes").get<std::size_t>()) {
      throw Error("bad-sidecar", path + ": sidecar counts disagree with shard");
    }
    const auto offsets = s.at("offsets").get<std::vector<std::uint64_t>>();
    const auto enc = encode_shard(part, sidecar.at("H").get<int>());
    if (offsets != enc.offsets) throw Error("bad-sidecar", path + ": chunk offsets disagree with shard");
    for (auto& c : part) all.push_back(std::move(c));
  }
  if (all.size() != sidecar.at("total_chunks").get<std::size_t>()) {
    throw Error("bad-sidecar", sidecar_path + ": total_chunks mismatch");
  }
  return all;
}

}  // namespace uact
