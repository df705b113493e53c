#include "fedsim/compression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedsim/detail/bytes_io.hpp"

namespace fedsim {

const char* compression_scheme_name(CompressionScheme scheme) {
  switch (scheme) {
    case CompressionScheme::kNone: return "none";
    case CompressionScheme::kTopK: return "topk";
    case CompressionScheme::kQuantize: return "quantize";
  }
  return "?";
}

CompressionScheme compression_scheme_from_name(const std::string& name) {
  if (name == "none") return CompressionScheme::kNone;
  if (name == "topk") return CompressionScheme::kTopK;
  if (name == "quantize") return CompressionScheme::kQuantize;
  raise(ErrorCode::kConfig, "unknown compression scheme: " + name);
}

namespace {

std::uint32_t quant_levels(int bits) { return (1u << bits) - 1; }

std::size_t packed_bytes(std::uint64_t dim, int bits) {
  switch (bits) {
    case 4: return (dim + 1) / 2;
    case 8: return dim;
    case 16: return 2 * dim;
  }
  raise(ErrorCode::kParameter, "quantize bits must be 4, 8, or 16");
}

std::size_t expected_payload_bytes(const CompressedUpdate& c) {
  switch (c.scheme) {
    case CompressionScheme::kNone: return c.original_dim * 8;
    case CompressionScheme::kTopK: return c.k * 12;
    case CompressionScheme::kQuantize:
      return packed_bytes(c.original_dim, c.bits);
  }
  raise(ErrorCode::kDecode, "unknown compression scheme byte");
}

}  // namespace

CompressedUpdate compress(const ParamVector& v, const CompressionConfig& cfg) {
  check_finite(v, "compress");
  const std::uint64_t dim = v.dim();
  CompressedUpdate out;
  out.scheme = cfg.scheme;
  out.original_dim = dim;
  out.version = v.version;
  detail::ByteWriter w;

  switch (cfg.scheme) {
    case CompressionScheme::kNone:
      for (double x : v.values) w.put_f64(x);
      break;

    case CompressionScheme::kTopK: {
      if (cfg.k < 1 || cfg.k > dim) {
        raise(ErrorCode::kParameter,
              "topk k must be in [1, dim], got " + std::to_string(cfg.k));
      }
      out.k = cfg.k;
      std::vector<std::uint32_t> idx(dim);
      std::iota(idx.begin(), idx.end(), 0u);
      std::stable_sort(idx.begin(), idx.end(),
                       [&](std::uint32_t a, std::uint32_t b) {
                         return std::abs(v.values[a]) > std::abs(v.values[b]);
                       });
      idx.resize(cfg.k);
      std::sort(idx.begin(), idx.end());
      for (std::uint32_t i : idx) {
        w.put_u32(i);
        w.put_f64(v.values[i]);
      }
      break;
    }

    case CompressionScheme::kQuantize: {
      if (cfg.bits != 4 && cfg.bits != 8 && cfg.bits != 16) {
        raise(ErrorCode::kParameter, "quantize bits must be 4, 8, or 16");
      }
      out.bits = static_cast<std::uint8_t>(cfg.bits);
      if (dim > 0) {
        const auto [lo_it, hi_it] =
            std::minmax_element(v.values.begin(), v.values.end());
        out.lo = *lo_it;
        out.hi = *hi_it;
      }
      const double span = out.hi - out.lo;
      const std::uint32_t levels = quant_levels(cfg.bits);
      std::vector<std::uint32_t> q(dim, 0);
      if (span > 0) {
        for (std::uint64_t i = 0; i < dim; ++i) {
          const double t = (v.values[i] - out.lo) / span;
          q[i] = static_cast<std::uint32_t>(
              std::llround(t * static_cast<double>(levels)));
        }
      }
      if (cfg.bits == 4) {
        for (std::uint64_t i = 0; i < dim; i += 2) {
          std::uint8_t b = static_cast<std::uint8_t>(q[i] & 0x0f);
          if (i + 1 < dim) b |= static_cast<std::uint8_t>((q[i + 1] & 0x0f) << 4);
          w.put_u8(b);
        }
      } else if (cfg.bits == 8) {
        for (std::uint64_t i = 0; i < dim; ++i) {
          w.put_u8(static_cast<std::uint8_t>(q[i]));
        }
      } else {
        for (std::uint64_t i = 0; i < dim; ++i) {
          w.put_u16(static_cast<std::uint16_t>(q[i]));
        }
      }
      break;
    }
  }

  out.payload = w.take();
  return out;
}

ParamVector decompress(const CompressedUpdate& c) {
  if (c.payload.size() != expected_payload_bytes(c)) {
    raise(ErrorCode::kDecode, "compressed payload has wrong length");
  }
  ParamVector out(std::vector<double>(c.original_dim, 0.0));
  out.version = c.version;
  detail::ByteReader r(c.payload);

  switch (c.scheme) {
    case CompressionScheme::kNone:
      for (std::uint64_t i = 0; i < c.original_dim; ++i) {
        out.values[i] = r.get_f64();
      }
      break;

    case CompressionScheme::kTopK: {
      if (c.k > c.original_dim) {
        raise(ErrorCode::kDecode, "topk k exceeds dimension");
      }
      std::int64_t prev = -1;
      for (std::uint64_t i = 0; i < c.k; ++i) {
        const std::uint32_t idx = r.get_u32();
        if (idx >= c.original_dim || static_cast<std::int64_t>(idx) <= prev) {
          raise(ErrorCode::kDecode, "topk indices not ascending in range");
        }
        prev = idx;
        out.values[idx] = r.get_f64();
      }
      break;
    }

    case CompressionScheme::kQuantize: {
      if (c.bits != 4 && c.bits != 8 && c.bits != 16) {
        raise(ErrorCode::kDecode, "bad quantize bit width");
      }
      if (!std::isfinite(c.lo) || !std::isfinite(c.hi) || c.hi < c.lo) {
        raise(ErrorCode::kDecode, "bad quantize range");
      }
      const double span = c.hi - c.lo;
      const double step =
          span > 0 ? span / static_cast<double>(quant_levels(c.bits)) : 0.0;
      std::vector<std::uint32_t> q(c.original_dim, 0);
      if (c.bits == 4) {
        for (std::uint64_t i = 0; i < c.original_dim; i += 2) {
          const std::uint8_t b = r.get_u8();
          q[i] = b & 0x0f;
          if (i + 1 < c.original_dim) q[i + 1] = (b >> 4) & 0x0f;
        }
      } else if (c.bits == 8) {
        for (std::uint64_t i = 0; i < c.original_dim; ++i) q[i] = r.get_u8();
      } else {
        for (std::uint64_t i = 0; i < c.original_dim; ++i) q[i] = r.get_u16();
      }
      for (std::uint64_t i = 0; i < c.original_dim; ++i) {
        out.values[i] = c.lo + static_cast<double>(q[i]) * step;
      }
      break;
    }
  }
  return out;
}

std::vector<std::uint8_t> serialize_compressed(const CompressedUpdate& c) {
  detail::ByteWriter w;
  w.put_u8(static_cast<std::uint8_t>(c.scheme));
  w.put_u64(c.original_dim);
  switch (c.scheme) {
    case CompressionScheme::kNone: break;
    case CompressionScheme::kTopK:
      w.put_u64(c.k);
      break;
    case CompressionScheme::kQuantize:
      w.put_u8(c.bits);
      w.put_f64(c.lo);
      w.put_f64(c.hi);
      break;
  }
  w.put_bytes(c.payload.data(), c.payload.size());
  return w.take();
}

CompressedUpdate deserialize_compressed(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes);
  CompressedUpdate c;
  const std::uint8_t scheme = r.get_u8();
  if (scheme > 2) raise(ErrorCode::kDecode, "unknown compression scheme byte");
  c.scheme = static_cast<CompressionScheme>(scheme);
  c.original_dim = r.get_u64();
  switch (c.scheme) {
    case CompressionScheme::kNone: break;
    case CompressionScheme::kTopK:
      c.k = r.get_u64();
      break;
    case CompressionScheme::kQuantize:
      c.bits = r.get_u8();
      c.lo = r.get_f64();
      c.hi = r.get_f64();
      break;
  }
  if (r.remaining() != expected_payload_bytes(c)) {
    raise(ErrorCode::kDecode, "compressed payload has wrong length");
  }
  c.payload.resize(r.remaining());
  r.get_bytes(c.payload.data(), c.payload.size());
  return c;
}

}  // namespace fedsim
