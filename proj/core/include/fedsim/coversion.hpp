#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/hash_chain.hpp"

namespace fedsim {

// One client's part in a global aggregation round.
struct Contribution {
  std::string client_id;
  std::uint32_t local_version = 0;
  Digest update_digest{};  // digest of the update's canonical bytes

  bool operator==(const Contribution&) const = default;
};

struct CoVersionRecord {
  std::uint32_t global_version = 0;
  Digest global_digest{};  // digest of the aggregated model's canonical bytes
  std::vector<Contribution> contributing;  // in submission order
  Digest parent_global_digest{};
  Digest record_digest{};

  bool operator==(const CoVersionRecord&) const = default;
};

// Which local models made each global model. Backed by the hash chain,
// so the history is append-only and tamper-evident; reward entries may
// share the chain under their own record kind.
class CoVersionRegistry {
 public:
  // parent must match the current chain tip; a mismatch means a skipped
  // round or tampering and raises kChainIntegrity. global_version must
  // be new.
  const CoVersionRecord& record_co_version(std::uint32_t global_version,
                                           const Digest& global_digest,
                                           std::vector<Contribution> contributing,
                                           const Digest& parent_digest);

  // Contributor (client_id, local_version) pairs of one round, in
  // submission order. Unknown version raises kNotFound.
  std::vector<std::pair<std::string, std::uint32_t>> lineage(
      std::uint32_t global_version) const;

  const CoVersionRecord& record_for(std::uint32_t global_version) const;
  bool has_version(std::uint32_t global_version) const;
  bool has_global_digest(const Digest& digest) const;

  std::size_t global_records() const { return records_.size(); }
  std::size_t local_entries() const;  // total contributions across rounds
  Digest tip() const { return chain_.tip(); }

  const HashChain& chain() const { return chain_; }
  HashChain& chain() { return chain_; }

  void save(const std::filesystem::path& path) const { chain_.save(path); }
  // Verifies the chain, then rebuilds the index from co-version records.
  static CoVersionRegistry load(const std::filesystem::path& path);

 private:
  HashChain chain_;
  std::vector<CoVersionRecord> records_;
  std::map<std::uint32_t, std::size_t> by_version_;
};

std::vector<std::uint8_t> encode_co_version_body(const CoVersionRecord& rec);
CoVersionRecord decode_co_version_body(const std::vector<std::uint8_t>& body);

}  // namespace fedsim
