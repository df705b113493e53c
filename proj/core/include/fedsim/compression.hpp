#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/param_vector.hpp"

namespace fedsim {

enum class CompressionScheme : std::uint8_t { kNone = 0, kTopK = 1, kQuantize = 2 };

const char* compression_scheme_name(CompressionScheme scheme);
CompressionScheme compression_scheme_from_name(const std::string& name);

struct CompressionConfig {
  CompressionScheme scheme = CompressionScheme::kNone;
  std::uint64_t k = 0;   // topk: entries kept, 1 <= k <= dim
  int bits = 8;          // quantize: 4, 8, or 16
};

// A parameter vector in wire form. `payload` is the data section only;
// the canonical byte layout (little-endian) is
//   u8 scheme | u64 dim | scheme params | payload
// where params are: none ->, topk -> u64 k, quantize -> u8 bits, f64 lo,
// f64 hi. Payload: none -> dim f64; topk -> k pairs (u32 index
// ascending, f64 value); quantize -> dim levels packed at `bits` each,
// low bits first.
struct CompressedUpdate {
  CompressionScheme scheme = CompressionScheme::kNone;
  std::vector<std::uint8_t> payload;
  std::uint64_t original_dim = 0;
  std::uint64_t k = 0;       // topk only
  std::uint8_t bits = 0;     // quantize only
  double lo = 0.0, hi = 0.0;  // quantize grid range
  std::uint32_t version = 0;  // carried through, not serialized

  std::size_t original_bytes() const { return original_dim * sizeof(double); }
  std::size_t compressed_bytes() const { return payload.size(); }
};

// topk keeps the k largest-magnitude entries (ties to the lower index);
// quantize snaps each value to the nearest level of a uniform grid with
// 2^bits levels over [min, max]. The worst-case quantize error is
// (max - min) / (2 * (2^bits - 1)).
CompressedUpdate compress(const ParamVector& v, const CompressionConfig& cfg);
ParamVector decompress(const CompressedUpdate& c);

// Full canonical byte form (header + payload), e.g. for digests.
std::vector<std::uint8_t> serialize_compressed(const CompressedUpdate& c);
CompressedUpdate deserialize_compressed(const std::vector<std::uint8_t>& bytes);

}  // namespace fedsim
