#include "fedsim/coversion.hpp"

#include "fedsim/detail/bytes_io.hpp"

namespace fedsim {

std::vector<std::uint8_t> encode_co_version_body(const CoVersionRecord& rec) {
  detail::ByteWriter w;
  w.put_u32(rec.global_version);
  w.put_bytes(rec.global_digest.data(), rec.global_digest.size());
  w.put_u32(static_cast<std::uint32_t>(rec.contributing.size()));
  for (const Contribution& c : rec.contributing) {
    w.put_string(c.client_id);
    w.put_u32(c.local_version);
    w.put_bytes(c.update_digest.data(), c.update_digest.size());
  }
  return w.take();
}

CoVersionRecord decode_co_version_body(const std::vector<std::uint8_t>& body) {
  detail::ByteReader r(body);
  CoVersionRecord rec;
  rec.global_version = r.get_u32();
  r.get_bytes(rec.global_digest.data(), rec.global_digest.size());
  const std::uint32_t n = r.get_u32();
  rec.contributing.resize(n);
  for (Contribution& c : rec.contributing) {
    c.client_id = r.get_string();
    c.local_version = r.get_u32();
    r.get_bytes(c.update_digest.data(), c.update_digest.size());
  }
  if (!r.done()) {
    raise(ErrorCode::kDecode, "co-version record has trailing bytes");
  }
  return rec;
}

const CoVersionRecord& CoVersionRegistry::record_co_version(
    std::uint32_t global_version, const Digest& global_digest,
    std::vector<Contribution> contributing, const Digest& parent_digest) {
  if (parent_digest != chain_.tip()) {
    raise(ErrorCode::kChainIntegrity,
          "co-version parent digest does not match the chain tip at version " +
              std::to_string(global_version));
  }
  if (by_version_.count(global_version)) {
    raise(ErrorCode::kRegistryConflict,
          "global version " + std::to_string(global_version) +
              " already recorded");
  }
  CoVersionRecord rec;
  rec.global_version = global_version;
  rec.global_digest = global_digest;
  rec.contributing = std::move(contributing);
  const ChainRecord chained =
      chain_.append(kRecordCoVersion, encode_co_version_body(rec));
  rec.parent_global_digest = chained.parent;
  rec.record_digest = chained.digest;
  by_version_[global_version] = records_.size();
  records_.push_back(std::move(rec));
  return records_.back();
}

std::vector<std::pair<std::string, std::uint32_t>> CoVersionRegistry::lineage(
    std::uint32_t global_version) const {
  const CoVersionRecord& rec = record_for(global_version);
  std::vector<std::pair<std::string, std::uint32_t>> out;
  out.reserve(rec.contributing.size());
  for (const Contribution& c : rec.contributing) {
    out.emplace_back(c.client_id, c.local_version);
  }
  return out;
}

const CoVersionRecord& CoVersionRegistry::record_for(
    std::uint32_t global_version) const {
  auto it = by_version_.find(global_version);
  if (it == by_version_.end()) {
    raise(ErrorCode::kNotFound,
          "global version " + std::to_string(global_version) + " not found");
  }
  return records_[it->second];
}

bool CoVersionRegistry::has_version(std::uint32_t global_version) const {
  return by_version_.count(global_version) > 0;
}

bool CoVersionRegistry::has_global_digest(const Digest& digest) const {
  for (const CoVersionRecord& rec : records_) {
    if (rec.global_digest == digest) return true;
  }
  return false;
}

std::size_t CoVersionRegistry::local_entries() const {
  std::size_t n = 0;
  for (const CoVersionRecord& rec : records_) n += rec.contributing.size();
  return n;
}

CoVersionRegistry CoVersionRegistry::load(const std::filesystem::path& path) {
  CoVersionRegistry reg;
  reg.chain_ = HashChain::load(path);
  reg.chain_.verify();
  for (const ChainRecord& chained : reg.chain_.snapshot()) {
    if (chained.kind != kRecordCoVersion) continue;
    CoVersionRecord rec = decode_co_version_body(chained.body);
    rec.parent_global_digest = chained.parent;
    rec.record_digest = chained.digest;
    if (reg.by_version_.count(rec.global_version)) {
      raise(ErrorCode::kDecode, "duplicate global version " +
                                    std::to_string(rec.global_version) +
                                    " in chain file");
    }
    reg.by_version_[rec.global_version] = reg.records_.size();
    reg.records_.push_back(std::move(rec));
  }
  return reg;
}

}  // namespace fedsim
