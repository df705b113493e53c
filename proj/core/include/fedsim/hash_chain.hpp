#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"

namespace fedsim {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(const std::uint8_t* data, std::size_t size);
Digest sha256(const std::vector<std::uint8_t>& data);
std::string digest_hex(const Digest& d);

// All-zero parent of the first record.
inline Digest genesis_digest() { return Digest{}; }

// Record kinds multiplexed onto one chain.
inline constexpr std::uint8_t kRecordCoVersion = 0;
inline constexpr std::uint8_t kRecordReward = 1;

struct ChainRecord {
  std::uint8_t kind = 0;
  std::vector<std::uint8_t> body;
  Digest parent{};  // digest of the previous record, zeros at genesis
  Digest digest{};  // sha256(parent | kind | body)

  bool operator==(const ChainRecord&) const = default;
};

// Append-only hash-chained log. Single writer, many readers; a reader
// never sees a partially appended record. File form is little-endian:
// per record, u32 length then kind(1) | parent(32) | digest(32) | body.
class HashChain {
 public:
  HashChain() = default;
  HashChain(const HashChain& other);
  HashChain& operator=(const HashChain& other);

  ChainRecord append(std::uint8_t kind, std::vector<std::uint8_t> body);

  std::size_t size() const;
  ChainRecord at(std::size_t index) const;
  std::vector<ChainRecord> snapshot() const;
  Digest tip() const;  // digest of the last record, genesis_digest() if empty

  // Index of the first record whose digest or parent link is wrong;
  // nullopt when the whole chain verifies.
  std::optional<std::size_t> first_invalid() const;
  void verify() const;  // throws kChainIntegrity naming that index

  void save(const std::filesystem::path& path) const;
  static HashChain load(const std::filesystem::path& path);

 private:
  mutable std::shared_mutex mu_;
  std::vector<ChainRecord> records_;
};

Digest chain_record_digest(const Digest& parent, std::uint8_t kind,
                           const std::vector<std::uint8_t>& body);

}  // namespace fedsim
